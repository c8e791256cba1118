#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "lead/error.hpp"
#include "lead/numcore/gradcheck.hpp"
#include "lead/numcore/ops.hpp"
#include "lead/numcore/optim.hpp"
#include "lead/numcore/prob.hpp"
#include "lead/numcore/tensor.hpp"

using namespace lead;
using namespace lead::num;

namespace {

Tensor random_param(std::size_t r, std::size_t c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(r * c);
  for (double& x : v) x = d(rng);
  return Tensor::parameter({r, c}, v);
}

// Independent softmax used as an oracle.
std::vector<double> oracle_softmax(const std::vector<double>& x, double tau) {
  double m = x[0] / tau;
  for (double v : x) m = std::max(m, v / tau);
  std::vector<double> out;
  double z = 0.0;
  for (double v : x) z += std::exp(v / tau - m);
  for (double v : x) out.push_back(std::exp(v / tau - m) / z);
  return out;
}

}  // namespace

TEST_CASE("softmax_with_temperature examples") {
  auto a = softmax_with_temperature(std::vector<double>{0.0, 0.0}, 1.0);
  CHECK(a[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a[1] == doctest::Approx(0.5).epsilon(1e-12));
  auto b = softmax_with_temperature(std::vector<double>{1.0, 0.0}, 1.0);
  const double e = std::exp(1.0);
  CHECK(b[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(b[0] == doctest::Approx(0.73106).epsilon(1e-5));
  CHECK(b[1] == doctest::Approx(0.26894).epsilon(1e-5));
  auto c = softmax_with_temperature(std::vector<double>{5.0, -3.0, 2.0}, 1e6);
  for (double v : c) CHECK(std::abs(v - 1.0 / 3.0) < 1e-3);
}

TEST_CASE("softmax_with_temperature errors") {
  CHECK_THROWS_AS(softmax_with_temperature(std::vector<double>{1.0}, 0.0), InvalidParameter);
  CHECK_THROWS_AS(softmax_with_temperature(std::vector<double>{1.0}, -1.0), InvalidParameter);
  CHECK_THROWS_AS(softmax_with_temperature(std::vector<double>{}, 1.0), InvalidInput);
  CHECK_THROWS_AS(softmax_with_temperature(std::vector<double>{NAN, 1.0}, 1.0), InvalidInput);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  std::uniform_int_distribution<int> len(1, 20);
  std::uniform_real_distribution<double> lt(-3.0, 3.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(len(rng)));
    for (double& v : x) v = u(rng);
    const double tau = std::pow(10.0, lt(rng));
    auto p = softmax_with_temperature(x, tau);
    double s = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-9);
    auto shifted = x;
    const double c = u(rng);
    for (double& v : shifted) v += c;
    auto q = softmax_with_temperature(shifted, tau);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
    auto o = oracle_softmax(x, tau);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - o[i]) < 1e-12);
  }
}

TEST_CASE("kl_divergence examples") {
  CHECK(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}) == 0.0);
  CHECK(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const double expected = 0.25 * std::log(1.0 / 3.0) + 0.75 * std::log(3.0);
  CHECK(kl_divergence(std::vector<double>{0.25, 0.75}, std::vector<double>{0.75, 0.25}) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.549306).epsilon(1e-6));
}

TEST_CASE("kl_divergence errors") {
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), InvalidInput);
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), DomainError);
  // q may be zero where p is zero.
  CHECK(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0}) == 0.0);
}

TEST_CASE("Gibbs inequality on random distributions") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> a(6), b(6);
    for (double& v : a) v = u(rng);
    for (double& v : b) v = u(rng);
    auto p = softmax_with_temperature(a, 1.0);
    auto q = softmax_with_temperature(b, 1.0);
    CHECK(kl_divergence(p, q) >= 0.0);
    CHECK(kl_divergence(p, p) < 1e-12);
  }
}

TEST_CASE("backward examples") {
  SUBCASE("x squared") {
    auto x = Tensor::parameter({1}, {3.0});
    auto y = mul(x, x);
    backward(y);
    CHECK(x.grad()[0] == doctest::Approx(6.0));
  }
  SUBCASE("log softmax at zero") {
    auto x = Tensor::parameter({1, 2}, {0.0, 0.0});
    auto y = element(log_softmax(x, 1.0), 0);
    backward(y);
    CHECK(x.grad()[0] == doctest::Approx(0.5));
    CHECK(x.grad()[1] == doctest::Approx(-0.5));
  }
  SUBCASE("constant node gets no gradient") {
    auto x = Tensor::parameter({1}, {2.0});
    auto c = Tensor::constant({1}, {4.0});
    backward(mul(x, c));
    CHECK(x.grad()[0] == doctest::Approx(4.0));
    CHECK(c.grad().empty());
  }
  SUBCASE("non-scalar seed") {
    auto x = Tensor::parameter({1, 2}, {1.0, 2.0});
    CHECK_THROWS_AS(backward(scale(x, 2.0)), InvalidInput);
  }
}

TEST_CASE("backward is deterministic and does not accumulate across calls") {
  std::mt19937_64 rng(3);
  auto a = random_param(3, 4, rng);
  auto b = random_param(4, 2, rng);
  auto loss = sum(gelu(matmul(a, b)));
  ComputeGraph g(loss);
  g.backward();
  std::vector<double> first(a.grad().begin(), a.grad().end());
  g.backward();
  std::vector<double> second(a.grad().begin(), a.grad().end());
  CHECK(first == second);
}

TEST_CASE("shared subexpressions are visited once") {
  auto x = Tensor::parameter({1}, {2.0});
  auto y = mul(x, x);
  auto z = add(y, y);  // 2x^2
  ComputeGraph g(z);
  CHECK(g.size() == 3);
  g.backward();
  CHECK(x.grad()[0] == doctest::Approx(8.0));
}

TEST_CASE("no-grad mode records no graph") {
  auto x = Tensor::parameter({1}, {2.0});
  NoGradGuard guard;
  auto y = mul(x, x);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("finite_difference_check examples") {
  std::mt19937_64 rng(9);
  auto x = random_param(1, 8, rng);
  CHECK(finite_difference_check([&] { return sum(mul(x, x)); }, {x}, 1e-4) < 1e-6);
  auto c = Tensor::constant({1}, {1.5});
  CHECK(finite_difference_check([&] { return scale(c, 2.0); }, {x}, 1e-4) == 0.0);
  CHECK_THROWS_AS(finite_difference_check([&] { return sum(x); }, {x}, 0.0), InvalidParameter);
}

TEST_CASE("every differentiable operation passes finite differences at 100 random points") {
  std::mt19937_64 rng(2024);
  const double step = 1e-5;
  for (int point = 0; point < 100; ++point) {
    auto a = random_param(3, 4, rng);
    auto b = random_param(4, 3, rng);
    auto c = random_param(3, 4, rng);
    auto r = random_param(1, 4, rng);
    auto v = random_param(1, 5, rng);
    auto w = random_param(1, 5, rng);
    auto pos = Tensor::parameter({2, 3}, {0.5, 1.0, 2.0, 0.3, 0.7, 1.4});
    for (double& x : pos.data()) x += std::uniform_real_distribution<double>(0.0, 0.1)(rng);
    auto gamma = random_param(1, 4, rng);
    auto beta = random_param(1, 4, rng);
    const std::int32_t ids[] = {2, 0, 1, 2};
    const double tau = std::uniform_real_distribution<double>(0.3, 3.0)(rng);
    // Weighted sum so every output entry contributes a distinct gradient.
    auto probe = [&](const Tensor& t) {
      std::vector<double> coef(t.size());
      for (std::size_t i = 0; i < coef.size(); ++i) coef[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
      return sum(mul(t, Tensor::constant(t.shape(), coef)));
    };
    CHECK(finite_difference_check([&] { return probe(matmul(a, b)); }, {a, b}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(matmul_nt(a, c)); }, {a, c}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(add(a, c)); }, {a, c}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(sub(a, c)); }, {a, c}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(mul(a, c)); }, {a, c}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(scale(a, -1.7)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(add_row(a, r)); }, {a, r}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(exp(a)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(log(pos)); }, {pos}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(tanh(a)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(gelu(a)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return mean(mul(a, a)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(row_max(a)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return dot(v, w); }, {v, w}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(row(a, 1)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return mul(element(a, 5), element(c, 2)); }, {a, c}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(gather_rows(a, ids)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(stack_rows({row(a, 2), r, row(c, 0)})); }, {a, c, r}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(concat_cols({v, r, w})); }, {v, w, r}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(take_rows(a, 2)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(softmax_rows(a)); }, {a}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(log_softmax(v, tau)); }, {v}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return probe(layer_norm(a, gamma, beta)); }, {a, gamma, beta}, step) < 1e-4);
    CHECK(finite_difference_check(
              [&] { return kl_from_log(log_softmax(v, tau), log_softmax(w, tau)); }, {v, w}, step) < 1e-4);
    CHECK(finite_difference_check([&] { return mse(a, c); }, {a, c}, step) < 1e-4);
  }
}

TEST_CASE("operation shape errors") {
  auto a = Tensor::parameter({2, 3}, std::vector<double>(6, 1.0));
  auto b = Tensor::parameter({2, 2}, std::vector<double>(4, 1.0));
  CHECK_THROWS_AS(matmul(a, b), InvalidInput);
  CHECK_THROWS_AS(add(a, b), InvalidInput);
  CHECK_THROWS_AS(row(a, 2), InvalidInput);
  CHECK_THROWS_AS(log(Tensor::constant({1}, {0.0})), DomainError);
  CHECK_THROWS_AS(Tensor::constant({2, 2}, {1.0}), InvalidInput);
  CHECK_THROWS_AS(log_softmax(a, 1.0), InvalidInput);
}

TEST_CASE("AdamW and schedule") {
  auto x = Tensor::parameter({1, 2}, {1.0, -1.0});
  AdamW opt({x}, AdamWConfig{0.9, 0.999, 1e-8, 0.0});
  backward(sum(mul(x, x)));
  opt.step(0.0);
  CHECK(x.values()[0] == 1.0);
  CHECK(x.values()[1] == -1.0);
  backward(sum(mul(x, x)));
  opt.step(0.1);
  // First Adam step moves each coordinate by lr against the gradient sign.
  CHECK(x.values()[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(x.values()[1] == doctest::Approx(-0.9).epsilon(1e-6));

  CHECK(scheduled_lr(1.0, 0, 100, 0.1) == doctest::Approx(0.1));
  CHECK(scheduled_lr(1.0, 9, 100, 0.1) == doctest::Approx(1.0));
  CHECK(scheduled_lr(1.0, 99, 100, 0.1) > 0.0);
  CHECK(scheduled_lr(1.0, 99, 100, 0.1) < 0.02);
  CHECK(scheduled_lr(1.0, 5, 10, 0.0) == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("absolute tolerance excuses rounding noise only") {
  // Adding the same offset to every logit leaves log-softmax differences unchanged.
  auto x = Tensor::parameter({1, 3}, {0.2, -0.4, 1.1});
  auto shift = Tensor::parameter({1}, {0.7});
  auto fn = [&] {
    auto shifted = add(x, stack_rows({concat_cols({shift, shift, shift})}));
    auto lp = log_softmax(shifted, 1.0);
    return sub(element(lp, 0), element(lp, 2));
  };
  std::size_t excused = 99;
  CHECK(finite_difference_check(fn, {x, shift}, 1e-5, 1e-8, &excused) < 1e-6);
  CHECK(excused <= 2);
  // A derivative of 2 with a deliberately crude step is never excused.
  auto y = Tensor::parameter({1}, {0.5});
  const double crude = finite_difference_check([&] { return exp(mul(y, y)); }, {y}, 0.5, 1e-8, &excused);
  CHECK(crude > 1e-3);
  CHECK(excused == 0);
  CHECK_THROWS_AS(finite_difference_check(fn, {x}, 1e-5, -1.0), InvalidParameter);
}
