#pragma once

#include <vector>

#include "lead/distill/types.hpp"
#include "lead/model/retrieval_model.hpp"
#include "lead/numcore/tensor.hpp"

namespace lead::distill {

// Learned linear map used by the feature-matching baseline to bring student
// CLS vectors into the teacher's representation space.
struct FeatureAligner {
  num::Tensor weight;  // in × out
  num::Tensor bias;    // 1 × out

  static FeatureAligner create(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);
  std::vector<num::Tensor> parameters() const { return {weight, bias}; }
};

// Per-example layer weights, indexed [example][k].
using WeightTable = std::vector<std::vector<double>>;

struct Objective {
  num::Tensor total;  // batch mean, differentiable
  LossBreakdown breakdown;
  WeightTable weights;
};

// Builds the batch-mean training objective for `method`. Any variant may be
// trained alone with student_only; distillation needs a DE or CB student.
//   student_only  L_stu
//   RD            L_rep + L_stu (+ L_tch with joint training)
//   FD            L_fd + L_stu (+ L_tch with joint training)
//   LEAD          L_lyr + L_rep + L_stu (+ L_tch with joint training)
// Without joint training every teacher quantity is detached and the reverse
// response KL is dropped. `fixed_weights`, when given, replaces the layer
// weights computed from the teacher (used by gradient checks).
Objective build_objective(const model::RetrievalModel* teacher, const model::RetrievalModel& student,
                          const Batch& batch, const DistillConfig& config, Method method,
                          const LayerSelection& selection, const WeightTable* fixed_weights = nullptr,
                          const FeatureAligner* aligner = nullptr);

// Wraps independent examples as a batch with no in-batch references.
Batch make_batch(std::vector<TrainExample> examples);

}  // namespace lead::distill
