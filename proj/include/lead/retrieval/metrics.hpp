#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "lead/retrieval/trec.hpp"

namespace lead::retrieval {

// Each metric averages over the queries present in the run that have at
// least one relevant passage in the qrels. Records past depth k are ignored.
// Throws InvalidParameter for k == 0 and InvalidInput if no query qualifies.
double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k);
double recall_at_k(const Run& run, const Qrels& qrels, std::size_t k);
// Precision at each relevant hit, summed and divided by the total number of
// relevant passages for the query.
double map_at_k(const Run& run, const Qrels& qrels, std::size_t k);
// Gain 2^grade - 1, discount log2(rank + 1), normalized by the ideal DCG.
double ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k);

struct MetricSet {
  double mrr = 0.0;
  double map = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
};

MetricSet evaluate_run(const Run& run, const Qrels& qrels, std::size_t k);

// Per-query values for one metric ("mrr", "map", "recall", "ndcg").
std::map<std::string, double> per_query(const Run& run, const Qrels& qrels, std::size_t k,
                                        const std::string& metric);

}  // namespace lead::retrieval
