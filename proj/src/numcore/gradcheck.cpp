#include "lead/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lead/error.hpp"

namespace lead::num {

namespace {
// Excused entries are only counted when they would have breached the bound
// every gradient test in the project uses.
constexpr double kReportedRelative = 1e-4;
}  // namespace

double finite_difference_check(const std::function<Tensor()>& fn, std::vector<Tensor> params,
                               double step, double abs_tolerance, std::size_t* excused) {
  if (!(step > 0.0)) throw InvalidParameter("finite difference step must be positive");
  if (abs_tolerance < 0.0) throw InvalidParameter("absolute tolerance must be non-negative");
  if (excused) *excused = 0;

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) p.node()->grad.assign(p.size(), 0.0);
  Tensor out = fn();
  backward(out);
  for (auto& p : params) {
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + step;
      const double up = fn().item();
      data[i] = saved - step;
      const double down = fn().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
      if (std::abs(a - numeric) <= abs_tolerance) {
        if (excused && err >= kReportedRelative) ++*excused;
        continue;
      }
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace lead::num
