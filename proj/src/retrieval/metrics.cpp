#include "lead/retrieval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "lead/error.hpp"

namespace lead::retrieval {

namespace {

using QueryMetric =
    std::function<double(const std::vector<RunRecord>&, const Qrels&, const std::string&, std::size_t)>;

double rr(const std::vector<RunRecord>& recs, const Qrels& q, const std::string& qid, std::size_t k) {
  const std::size_t depth = std::min(k, recs.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (q.grade(qid, recs[i].passage_id) > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double recall(const std::vector<RunRecord>& recs, const Qrels& q, const std::string& qid,
              std::size_t k) {
  const std::size_t depth = std::min(k, recs.size());
  std::size_t found = 0;
  for (std::size_t i = 0; i < depth; ++i) found += q.grade(qid, recs[i].passage_id) > 0;
  return static_cast<double>(found) / static_cast<double>(q.num_relevant(qid));
}

double ap(const std::vector<RunRecord>& recs, const Qrels& q, const std::string& qid, std::size_t k) {
  const std::size_t depth = std::min(k, recs.size());
  std::size_t found = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (q.grade(qid, recs[i].passage_id) > 0) {
      ++found;
      sum += static_cast<double>(found) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(q.num_relevant(qid));
}

double ndcg(const std::vector<RunRecord>& recs, const Qrels& q, const std::string& qid,
            std::size_t k) {
  const std::size_t depth = std::min(k, recs.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    const int g = q.grade(qid, recs[i].passage_id);
    if (g > 0) dcg += (std::exp2(g) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> grades;
  for (const auto& [pid, g] : q.judgments().at(qid)) {
    if (g > 0) grades.push_back(g);
  }
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) {
    ideal += (std::exp2(grades[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / ideal;
}

QueryMetric lookup(const std::string& metric) {
  if (metric == "mrr") return rr;
  if (metric == "map") return ap;
  if (metric == "recall") return recall;
  if (metric == "ndcg") return ndcg;
  throw InvalidParameter("unknown metric '" + metric + "'");
}

std::map<std::string, double> per_query_impl(const Run& run, const Qrels& qrels, std::size_t k,
                                             const QueryMetric& f) {
  if (k == 0) throw InvalidParameter("metric depth k must be at least 1");
  std::map<std::string, double> out;
  for (const auto& [qid, recs] : run) {
    if (qrels.num_relevant(qid) == 0) continue;
    out[qid] = f(recs, qrels, qid, k);
  }
  return out;
}

double mean_over(const Run& run, const Qrels& qrels, std::size_t k, const QueryMetric& f) {
  auto values = per_query_impl(run, qrels, k, f);
  if (values.empty()) throw InvalidInput("no evaluated queries: none in the run has a relevant passage");
  double s = 0.0;
  for (const auto& [qid, v] : values) s += v;
  return s / static_cast<double>(values.size());
}

}  // namespace

double mrr_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return mean_over(run, qrels, k, rr);
}
double recall_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return mean_over(run, qrels, k, recall);
}
double map_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return mean_over(run, qrels, k, ap);
}
double ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k) {
  return mean_over(run, qrels, k, ndcg);
}

MetricSet evaluate_run(const Run& run, const Qrels& qrels, std::size_t k) {
  return {mrr_at_k(run, qrels, k), map_at_k(run, qrels, k), recall_at_k(run, qrels, k),
          ndcg_at_k(run, qrels, k)};
}

std::map<std::string, double> per_query(const Run& run, const Qrels& qrels, std::size_t k,
                                        const std::string& metric) {
  return per_query_impl(run, qrels, k, lookup(metric));
}

}  // namespace lead::retrieval
