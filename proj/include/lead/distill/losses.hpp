#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lead/distill/types.hpp"
#include "lead/model/retrieval_model.hpp"

namespace lead::distill {

// softmax over the example's pool of layer-i scores divided by tau.
LayerFeature layer_feature(const model::RetrievalModel& model, int layer,
                           const TrainExample& example, double tau);

// w_i ∝ exp(−KL(y ‖ t_i) / tau); with one-hot y, KL(y ‖ t) = −log t[gold].
std::vector<double> layer_weights(std::span<const LayerFeature> teacher_features,
                                  std::span<const double> label, double tau);

// Σ_i w_i · KL(t_i ‖ s_i).
double layer_loss(const LayerSelection& selection, std::span<const LayerFeature> teacher_features,
                  std::span<const LayerFeature> student_features, std::span<const double> weights);

// KL(t ‖ s) + KL(s ‖ t) with joint training, KL(t ‖ s) alone otherwise.
double response_loss(const LayerFeature& teacher_top, const LayerFeature& student_top,
                     bool joint_training);

// −Σ_{p ∈ positives} log softmax(scores)[p], no temperature.
double hard_loss(std::span<const double> scores, std::span<const std::size_t> positives);

// Full objective on one example with a given selection (layer weights are
// recomputed from the teacher features).
LossBreakdown total_loss(const model::RetrievalModel& teacher, const model::RetrievalModel& student,
                         const TrainExample& example, const DistillConfig& config,
                         const LayerSelection& selection);

}  // namespace lead::distill
