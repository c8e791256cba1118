#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "lead/model/retrieval_model.hpp"
#include "lead/retrieval/flat_index.hpp"
#include "lead/retrieval/trec.hpp"

namespace lead::retrieval {

using TokenTable = std::map<std::string, model::TokenSequence>;

// Passage embeddings of a DE model. Throws InvalidParameter for other variants.
FlatIndex build_index(const model::RetrievalModel& de, const TokenTable& passages);

// Dense first-stage run of depth k for every query.
Run retrieve(const model::RetrievalModel& de, const FlatIndex& index, const TokenTable& queries,
             std::size_t k);

struct MinedNegatives {
  std::map<std::string, std::vector<std::string>> lists;
  std::vector<std::string> warnings;
};

// For each query, the top_n highest-scoring passages with grade 0, in rank
// order. Relevant passages are skipped without consuming the budget; a query
// whose search depth runs out early gets a shorter list and a warning.
MinedNegatives mine_hard_negatives(const model::RetrievalModel& de, const TokenTable& passages,
                                   const TokenTable& queries, const Qrels& qrels,
                                   std::size_t top_n);
MinedNegatives mine_hard_negatives(const model::RetrievalModel& de, const FlatIndex& index,
                                   const TokenTable& queries, const Qrels& qrels,
                                   std::size_t top_n);

// Rescores candidates by the model's final score and re-sorts them.
std::vector<RunRecord> rerank(const model::RetrievalModel& m, const std::string& query_id,
                              const model::TokenSequence& query,
                              const std::vector<std::string>& candidates,
                              const TokenTable& passages);

// Reranks the first `depth` records of every query in a first-stage run.
Run rerank_run(const model::RetrievalModel& m, const Run& first_stage, const TokenTable& queries,
               const TokenTable& passages, std::size_t depth);

}  // namespace lead::retrieval
