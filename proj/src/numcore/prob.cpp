#include "lead/numcore/prob.hpp"

#include <algorithm>
#include <cmath>

#include "lead/error.hpp"

namespace lead::num {

std::vector<double> softmax_with_temperature(std::span<const double> logits, double tau) {
  if (!(tau > 0.0)) throw InvalidParameter("temperature must be positive");
  if (logits.empty()) throw InvalidInput("softmax of an empty vector");
  for (double x : logits) {
    if (!std::isfinite(x)) throw InvalidInput("softmax logits must be finite");
  }
  const double m = *std::max_element(logits.begin(), logits.end()) / tau;
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (out[i] = std::exp(logits[i] / tau - m));
  for (double& v : out) v /= z;
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInput("kl_divergence: length mismatch");
  if (p.empty()) throw InvalidInput("kl_divergence: empty distributions");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("kl_divergence: negative probability");
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw DomainError("kl_divergence: reference mass where q is zero");
    s += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative residue when p == q.
  return std::max(s, 0.0);
}

}  // namespace lead::num
