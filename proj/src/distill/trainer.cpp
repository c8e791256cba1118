#include "lead/distill/trainer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "lead/distill/selection.hpp"
#include "lead/error.hpp"

namespace lead::distill {

namespace {

std::string join(const std::vector<int>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return v.empty() ? "-" : s.str();
}

std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  s.precision(10);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return v.empty() ? "-" : s.str();
}

}  // namespace

Trainer::Trainer(model::RetrievalModel* teacher, model::RetrievalModel& student,
                 DistillConfig config, Method method, OptimSettings optim)
    : teacher_(teacher),
      student_(student),
      config_(config),
      method_(method),
      optim_(optim),
      selection_rng_(config.seed) {
  if (method != Method::StudentOnly && teacher == nullptr) {
    throw InvalidInput(std::string(method_name(method)) + " requires a teacher model");
  }
  if (method == Method::Layerwise) {
    selection_ = select_layers(config.strategy, static_cast<std::size_t>(teacher->effective_layers()),
                               static_cast<std::size_t>(student.effective_layers()), config.K,
                               selection_rng_, config.skip_stride);
  }
  std::vector<num::Tensor> student_params = student.parameters();
  student.set_trainable(true);
  if (method == Method::Feature) {
    const std::size_t s_dim = student.output_dim();
    const std::size_t in =
        teacher->variant() == model::Variant::CrossEncoder ? 2 * s_dim : s_dim;
    aligner_ = FeatureAligner::create(in, teacher->output_dim(), config.seed ^ 0x9e3779b97f4a7c15ULL);
    for (auto& t : aligner_->parameters()) student_params.push_back(t);
  }
  const num::AdamWConfig adam{.weight_decay = optim.weight_decay};
  student_opt_ = std::make_unique<num::AdamW>(student_params, adam);
  if (teacher_) {
    teacher_was_trainable_ = teacher_->trainable();
    const bool train_teacher = config.joint_training && method != Method::StudentOnly;
    teacher_->set_trainable(train_teacher);
    if (train_teacher) teacher_opt_ = std::make_unique<num::AdamW>(teacher_->parameters(), adam);
  }
}

Trainer::~Trainer() {
  if (teacher_) teacher_->set_trainable(teacher_was_trainable_);
}

void Trainer::set_trace(std::ostream* out) {
  trace_ = out;
  if (trace_) write_trace_header(*trace_);
}

LossBreakdown Trainer::train_step(const Batch& batch) {
  if (batch.examples.empty()) throw InvalidInput("train_step on an empty batch");
  if (method_ == Method::Layerwise && config_.strategy == SelectionStrategy::Random && step_ > 0) {
    selection_ = select_layers(config_.strategy, static_cast<std::size_t>(teacher_->effective_layers()),
                               static_cast<std::size_t>(student_.effective_layers()), config_.K,
                               selection_rng_, config_.skip_stride);
  }
  const model::RetrievalModel* teacher = method_ == Method::StudentOnly ? nullptr : teacher_;
  Objective obj = build_objective(teacher, student_, batch, config_, method_, selection_, nullptr,
                                  aligner_ ? &*aligner_ : nullptr);
  if (!std::isfinite(obj.breakdown.total)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << step_ << " (l_lyr=" << obj.breakdown.l_lyr
        << ", l_rep=" << obj.breakdown.l_rep << ", l_tch=" << obj.breakdown.l_tch
        << ", l_stu=" << obj.breakdown.l_stu << ", l_fd=" << obj.breakdown.l_fd << ")";
    throw DivergenceError(msg.str());
  }
  num::backward(obj.total);
  const double lr = num::scheduled_lr(optim_.learning_rate, step_, optim_.total_steps,
                                      optim_.warmup_proportion);
  student_opt_->step(lr);
  student_opt_->zero_grad();
  if (teacher_opt_) {
    teacher_opt_->step(lr);
    teacher_opt_->zero_grad();
  }
  if (trace_) write_trace_record(*trace_, step_, obj.breakdown, selection_);
  ++step_;
  return obj.breakdown;
}

void write_trace_header(std::ostream& out) {
  out << "step\tl_lyr\tl_rep\tl_tch\tl_stu\ttotal\tteacher_layers\tstudent_layers\tweights\n";
}

void write_trace_record(std::ostream& out, std::size_t step, const LossBreakdown& b,
                        const LayerSelection& selection) {
  std::ostringstream line;
  line.precision(10);
  line << step << '\t' << b.l_lyr << '\t' << b.l_rep << '\t' << b.l_tch << '\t' << b.l_stu << '\t'
       << b.total << '\t' << join(selection.teacher) << '\t' << join(selection.student) << '\t'
       << join(b.weights) << '\n';
  out << line.str();
}

}  // namespace lead::distill
