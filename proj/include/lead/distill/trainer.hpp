#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>

#include "lead/distill/objective.hpp"
#include "lead/distill/types.hpp"
#include "lead/model/retrieval_model.hpp"
#include "lead/numcore/optim.hpp"

namespace lead::distill {

struct OptimSettings {
  double learning_rate = 1e-3;
  std::size_t total_steps = 500;
  double warmup_proportion = 0.1;
  double weight_decay = 0.01;
};

// Owns optimiser state for one distillation run. The student always trains;
// the teacher trains only with joint training (otherwise it is frozen for
// the trainer's lifetime).
class Trainer {
 public:
  // `teacher` may be null for student_only.
  Trainer(model::RetrievalModel* teacher, model::RetrievalModel& student, DistillConfig config,
          Method method, OptimSettings optim);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // One optimiser step on the batch-mean objective. Random selection is
  // redrawn before every step. Throws DivergenceError on a non-finite loss.
  LossBreakdown train_step(const Batch& batch);

  std::size_t steps_taken() const { return step_; }
  const LayerSelection& selection() const { return selection_; }
  // Tab-separated record per step; the header is written immediately.
  void set_trace(std::ostream* out);

 private:
  model::RetrievalModel* teacher_;
  model::RetrievalModel& student_;
  DistillConfig config_;
  Method method_;
  OptimSettings optim_;
  std::mt19937_64 selection_rng_;
  LayerSelection selection_;
  std::optional<FeatureAligner> aligner_;
  std::unique_ptr<num::AdamW> student_opt_;
  std::unique_ptr<num::AdamW> teacher_opt_;
  bool teacher_was_trainable_ = true;
  std::size_t step_ = 0;
  std::ostream* trace_ = nullptr;
};

void write_trace_header(std::ostream& out);
void write_trace_record(std::ostream& out, std::size_t step, const LossBreakdown& b,
                        const LayerSelection& selection);

}  // namespace lead::distill
