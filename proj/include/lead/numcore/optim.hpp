#pragma once

#include <cstddef>
#include <vector>

#include "lead/numcore/tensor.hpp"

namespace lead::num {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay. Reads each parameter's grad buffer.
class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig config = {});

  void step(double lr);
  void zero_grad();
  std::size_t steps_taken() const { return t_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

// Linear warmup over the first warmup_proportion of total_steps, then linear
// decay to zero.
double scheduled_lr(double base_lr, std::size_t step, std::size_t total_steps,
                    double warmup_proportion);

}  // namespace lead::num
