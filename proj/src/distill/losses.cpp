#include "lead/distill/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lead/distill/objective.hpp"
#include "lead/error.hpp"
#include "lead/numcore/ops.hpp"
#include "lead/numcore/prob.hpp"

namespace lead::distill {

const Passage& TrainExample::pool_at(std::size_t i) const {
  if (i < positives.size()) return positives[i];
  if (i < pool_size()) return negatives[i - positives.size()];
  throw InvalidInput("pool index out of range");
}

std::vector<double> TrainExample::label() const {
  std::vector<double> y(pool_size(), 0.0);
  if (!y.empty()) y[0] = 1.0;
  return y;
}

void TrainExample::validate() const {
  if (positives.empty()) throw InvalidInput("example '" + query_id + "' has no positive passage");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::StudentOnly: return "student_only";
    case Method::Response: return "RD";
    case Method::Feature: return "FD";
    case Method::Layerwise: return "LEAD";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "student_only") return Method::StudentOnly;
  if (name == "RD") return Method::Response;
  if (name == "FD") return Method::Feature;
  if (name == "LEAD") return Method::Layerwise;
  throw InvalidParameter("unknown method '" + name + "' (expected student_only, RD, FD or LEAD)");
}

LayerFeature layer_feature(const model::RetrievalModel& m, int layer, const TrainExample& example,
                           double tau) {
  if (example.pool_size() == 0) throw InvalidInput("layer feature over an empty pool");
  num::NoGradGuard no_grad;
  num::Tensor logits;
  if (m.variant() == model::Variant::CrossEncoder) {
    std::vector<model::Encoding> pairs;
    for (std::size_t i = 0; i < example.pool_size(); ++i) {
      pairs.push_back(m.encode_pair(example.query, example.pool_at(i).tokens));
    }
    std::vector<const model::Encoding*> ptrs;
    for (const auto& p : pairs) ptrs.push_back(&p);
    logits = m.pool_scores(layer, nullptr, ptrs);
  } else {
    model::Encoding q = m.encode_query(example.query);
    std::vector<model::Encoding> ps;
    for (std::size_t i = 0; i < example.pool_size(); ++i) ps.push_back(m.encode_passage(example.pool_at(i).tokens));
    std::vector<const model::Encoding*> ptrs;
    for (const auto& p : ps) ptrs.push_back(&p);
    logits = m.pool_scores(layer, &q, ptrs);
  }
  return {layer, num::softmax_with_temperature(logits.values(), tau)};
}

std::vector<double> layer_weights(std::span<const LayerFeature> teacher_features,
                                  std::span<const double> label, double tau) {
  if (teacher_features.empty()) throw InvalidInput("layer weights need at least one feature");
  if (!(tau > 0.0)) throw InvalidParameter("temperature must be positive");
  std::vector<double> neg_kl(teacher_features.size());
  for (std::size_t i = 0; i < teacher_features.size(); ++i) {
    const auto& f = teacher_features[i].dist;
    if (f.size() != label.size()) throw InvalidInput("feature and label lengths differ");
    neg_kl[i] = -num::kl_divergence(label, f) / tau;
  }
  const double m = *std::max_element(neg_kl.begin(), neg_kl.end());
  double s = 0.0;
  for (double& v : neg_kl) s += (v = std::exp(v - m));
  for (double& v : neg_kl) v /= s;
  return neg_kl;
}

double layer_loss(const LayerSelection& selection, std::span<const LayerFeature> teacher_features,
                  std::span<const LayerFeature> student_features, std::span<const double> weights) {
  const std::size_t k = selection.teacher.size();
  if (selection.student.size() != k || teacher_features.size() != k ||
      student_features.size() != k || weights.size() != k) {
    throw InvalidInput("layer loss inputs must all have K entries");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    total += weights[i] * num::kl_divergence(teacher_features[i].dist, student_features[i].dist);
  }
  return total;
}

double response_loss(const LayerFeature& teacher_top, const LayerFeature& student_top,
                     bool joint_training) {
  if (teacher_top.dist.size() != student_top.dist.size()) {
    throw InvalidInput("response loss over different pools");
  }
  double loss = num::kl_divergence(teacher_top.dist, student_top.dist);
  if (joint_training) loss += num::kl_divergence(student_top.dist, teacher_top.dist);
  return loss;
}

double hard_loss(std::span<const double> scores, std::span<const std::size_t> positives) {
  if (positives.empty()) throw InvalidInput("hard loss needs at least one positive");
  if (scores.empty()) throw InvalidInput("hard loss over an empty pool");
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  const double lse = m + std::log(z);
  double loss = 0.0;
  for (std::size_t p : positives) {
    if (p >= scores.size()) throw InvalidInput("positive index outside the pool");
    loss -= scores[p] - lse;
  }
  return loss;
}

LossBreakdown total_loss(const model::RetrievalModel& teacher, const model::RetrievalModel& student,
                         const TrainExample& example, const DistillConfig& config,
                         const LayerSelection& selection) {
  num::NoGradGuard no_grad;
  return build_objective(&teacher, student, make_batch({example}), config, Method::Layerwise,
                         selection)
      .breakdown;
}

}  // namespace lead::distill
