#pragma once

// Five evaluated queries plus one query with no relevant passage (excluded
// from every mean). Expected values are closed forms worked out by hand from
// the metric definitions at k = 10.

#include <cmath>
#include <string>
#include <vector>

#include "lead/retrieval/trec.hpp"

namespace fixture {

inline lead::retrieval::Run metric_run() {
  using lead::retrieval::RunRecord;
  lead::retrieval::Run run;
  auto add = [&](const std::string& q, const std::vector<std::string>& ids) {
    double score = 100.0;
    std::size_t rank = 1;
    for (const auto& id : ids) run[q].push_back(RunRecord{q, id, rank++, score -= 1.0});
  };
  add("q1", {"a", "b", "c"});
  add("q2", {"a", "b", "c", "d"});
  add("q3", {"r1", "n1", "n2", "r2", "n3", "n4", "n5", "n6", "n7", "n8"});
  add("q4", {"n1", "x", "n2"});
  add("q5", {"p2", "p1", "n1"});
  add("q6", {"a", "b"});
  return run;
}

inline lead::retrieval::Qrels metric_qrels() {
  lead::retrieval::Qrels q;
  q.set("q1", "a", 1);
  q.set("q2", "c", 1);
  q.set("q3", "r1", 1);
  q.set("q3", "r2", 1);
  q.set("q4", "x", 1);
  q.set("q4", "y", 1);  // never retrieved
  q.set("q5", "p1", 2);
  q.set("q5", "p2", 1);
  q.set("q6", "a", 0);
  return q;
}

// q1: relevant at 1. q2: relevant at 3. q3: relevant at 1 and 4.
// q4: one of two relevant, at 2. q5: grade 1 at 1, grade 2 at 2.
inline double expected_mrr() { return (1.0 + 1.0 / 3 + 1.0 + 0.5 + 1.0) / 5; }
inline double expected_map() { return (1.0 + 1.0 / 3 + (1.0 + 2.0 / 4) / 2 + 0.5 / 2 + 1.0) / 5; }
inline double expected_recall() { return (1.0 + 1.0 + 1.0 + 0.5 + 1.0) / 5; }
inline double expected_q3_ndcg() { return (1.0 + 1.0 / std::log2(5.0)) / (1.0 + 1.0 / std::log2(3.0)); }
inline double expected_ndcg() {
  const double q2 = 1.0 / std::log2(4.0);
  const double q4 = (1.0 / std::log2(3.0)) / (1.0 + 1.0 / std::log2(3.0));
  const double q5 = (1.0 + 3.0 / std::log2(3.0)) / (3.0 + 1.0 / std::log2(3.0));
  return (1.0 + q2 + expected_q3_ndcg() + q4 + q5) / 5;
}

}  // namespace fixture
