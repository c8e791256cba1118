#include "lead/numcore/optim.hpp"

#include <algorithm>
#include <cmath>

namespace lead::num {

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
    if (p.grad().size() != p.size()) p.node()->grad.assign(p.size(), 0.0);
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k].data();
    auto g = params_[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
      w[i] -= lr * (update + config_.weight_decay * w[i]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) std::fill(p.grad_data().begin(), p.grad_data().end(), 0.0);
}

double scheduled_lr(double base_lr, std::size_t step, std::size_t total_steps,
                    double warmup_proportion) {
  if (total_steps == 0) return base_lr;
  const double total = static_cast<double>(total_steps);
  const double warm = std::floor(warmup_proportion * total);
  const double s = static_cast<double>(step);
  if (warm > 0.0 && s < warm) return base_lr * (s + 1.0) / warm;
  const double remaining = total - warm;
  if (remaining <= 0.0) return base_lr;
  return base_lr * std::max(0.0, (total - s) / remaining);
}

}  // namespace lead::num
