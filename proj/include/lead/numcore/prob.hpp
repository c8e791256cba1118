#pragma once

#include <span>
#include <vector>

namespace lead::num {

// softmax(logits / tau), max-subtracted.
std::vector<double> softmax_with_temperature(std::span<const double> logits, double tau);

// KL(p ‖ q) = Σ p·log(p/q) with 0·log 0 = 0. p is the reference distribution.
double kl_divergence(std::span<const double> p, std::span<const double> q);

}  // namespace lead::num
