#include "lead/numcore/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lead/error.hpp"

namespace lead::num {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

CMap view(const Node& n) { return CMap(n.value.data(), n.rows, n.cols); }
CMap grad_view(const Node& n) { return CMap(n.grad.data(), n.rows, n.cols); }
MMap grad_mut(Node& n) { return MMap(n.grad.data(), n.rows, n.cols); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput(std::string(op) + ": shape mismatch");
  }
}

template <class F>
Tensor unary(const Tensor& a, F f, std::function<void(Node&)> bw) {
  std::vector<double> out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(a.rows(), a.cols(), std::move(out), {&a}, std::move(bw));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimensions differ");
  std::vector<double> out(a.rows() * b.cols());
  MMap(out.data(), a.rows(), b.cols()).noalias() = view(*a.node()) * view(*b.node());
  return make_result(a.rows(), b.cols(), std::move(out), {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) grad_mut(pa).noalias() += grad_view(self) * view(pb).transpose();
    if (pb.requires_grad) grad_mut(pb).noalias() += view(pa).transpose() * grad_view(self);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw InvalidInput("matmul_nt: inner dimensions differ");
  std::vector<double> out(a.rows() * b.rows());
  MMap(out.data(), a.rows(), b.rows()).noalias() = view(*a.node()) * view(*b.node()).transpose();
  return make_result(a.rows(), b.rows(), std::move(out), {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) grad_mut(pa).noalias() += grad_view(self) * view(pb);
    if (pb.requires_grad) grad_mut(pb).noalias() += grad_view(self).transpose() * view(pa);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.rows(), a.cols(), std::move(out), {&a, &b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result(a.rows(), a.cols(), std::move(out), {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i];
      if (pb.requires_grad) pb.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result(a.rows(), a.cols(), std::move(out), {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i] * pb.value[i];
      if (pb.requires_grad) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += s * self.grad[i];
  });
}

Tensor add_row(const Tensor& a, const Tensor& r) {
  if (r.rows() != 1 || r.cols() != a.cols()) throw InvalidInput("add_row: row shape mismatch");
  std::vector<double> out(a.size());
  auto x = a.values();
  auto b = r.values();
  const std::size_t c = a.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + b[i % c];
  return make_result(a.rows(), c, std::move(out), {&a, &r}, [c](Node& self) {
    Node& pa = *self.parents[0];
    Node& pr = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i];
      if (pr.requires_grad) pr.grad[i % c] += self.grad[i];
    }
  });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] * self.value[i];
  });
}

Tensor log(const Tensor& a) {
  for (double x : a.values()) {
    if (!(x > 0.0)) throw DomainError("log of a non-positive value");
  }
  return unary(a, [](double x) { return std::log(x); }, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i] / p.value[i];
  });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double t = self.value[i];
      p.grad[i] += self.grad[i] * (1.0 - t * t);
    }
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double c = 0.044715;
  // 0.5 (1 + tanh(u)) == 1 / (1 + exp(-2u)), which is cheaper than tanh.
  auto half_gate = [](double x) { return 1.0 / (1.0 + std::exp(-2.0 * k * (x + c * x * x * x))); };
  return unary(
      a, [half_gate](double x) { return x * half_gate(x); },
      [half_gate](Node& self) {
        Node& p = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double x = p.value[i];
          const double s = half_gate(x);
          const double dt = 4.0 * s * (1.0 - s) * k * (1.0 + 3.0 * c * x * x);
          p.grad[i] += self.grad[i] * (s + 0.5 * x * dt);
        }
      });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return make_result(1, 1, {s}, {&a}, [](Node& self) {
    Node& p = *self.parents[0];
    for (double& g : p.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor row_max(const Tensor& a) {
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  std::vector<double> out(r);
  std::vector<std::size_t> arg(r);
  auto v = a.values();
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j) {
      if (v[i * c + j] > v[i * c + best]) best = j;
    }
    arg[i] = best;
    out[i] = v[i * c + best];
  }
  return make_result(r, 1, std::move(out), {&a}, [arg = std::move(arg), c](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < arg.size(); ++i) p.grad[i * c + arg[i]] += self.grad[i];
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw InvalidInput("dot: dimension mismatch");
  double s = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return make_result(1, 1, {s}, {&a, &b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double g = self.grad[0];
    for (std::size_t i = 0; i < pa.value.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += g * pb.value[i];
      if (pb.requires_grad) pb.grad[i] += g * pa.value[i];
    }
  });
}

Tensor row(const Tensor& a, std::size_t i) {
  if (i >= a.rows()) throw InvalidInput("row: index out of range");
  const std::size_t c = a.cols();
  auto v = a.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(i * c),
                          v.begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
  return make_result(1, c, std::move(out), {&a}, [i, c](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[j];
  });
}

Tensor element(const Tensor& a, std::size_t i) {
  if (i >= a.size()) throw InvalidInput("element: index out of range");
  return make_result(1, 1, {a.values()[i]}, {&a}, [i](Node& self) {
    self.parents[0]->grad[i] += self.grad[0];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids) {
  if (ids.empty()) throw InvalidInput("gather_rows: empty index list");
  const std::size_t c = table.cols();
  std::vector<double> out(ids.size() * c);
  auto v = table.values();
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= table.rows()) {
      throw InvalidInput("gather_rows: index " + std::to_string(ids[r]) + " out of range");
    }
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(ids[r] * c), c,
                out.begin() + static_cast<std::ptrdiff_t>(r * c));
  }
  std::vector<std::int32_t> idx(ids.begin(), ids.end());
  return make_result(ids.size(), c, std::move(out), {&table}, [idx = std::move(idx), c](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const std::size_t base = static_cast<std::size_t>(idx[r]) * c;
      for (std::size_t j = 0; j < c; ++j) p.grad[base + j] += self.grad[r * c + j];
    }
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw InvalidInput("stack_rows: no rows");
  const std::size_t c = rows.front().size();
  std::vector<double> out;
  out.reserve(rows.size() * c);
  for (const auto& r : rows) {
    if (r.size() != c) throw InvalidInput("stack_rows: rows differ in width");
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return make_result(rows.size(), c, std::move(out), rows, [c](Node& self) {
    for (std::size_t r = 0; r < self.parents.size(); ++r) {
      Node& p = *self.parents[r];
      if (!p.requires_grad) continue;
      for (std::size_t j = 0; j < c; ++j) p.grad[j] += self.grad[r * c + j];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidInput("concat_cols: no parts");
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.rows() != 1) throw InvalidInput("concat_cols: parts must be single rows");
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  const std::size_t n = out.size();
  return make_result(1, n, std::move(out), parts, [](Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t k = p->value.size();
      if (p->requires_grad) {
        for (std::size_t j = 0; j < k; ++j) p->grad[j] += self.grad[off + j];
      }
      off += k;
    }
  });
}

Tensor take_rows(const Tensor& a, std::size_t count) {
  if (count == 0 || count > a.rows()) throw InvalidInput("take_rows: bad row count");
  const std::size_t c = a.cols();
  auto v = a.values();
  std::vector<double> out(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count * c));
  return make_result(count, c, std::move(out), {&a}, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  std::vector<double> out(a.size());
  auto v = a.values();
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = v.data() + i * c;
    double* y = out.data() + i * c;
    const double m = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - m));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  return make_result(r, c, std::move(out), {&a}, [r, c](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = self.value.data() + i * c;
      const double* g = self.grad.data() + i * c;
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += g[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += y[j] * (g[j] - s);
    }
  });
}

Tensor log_softmax(const Tensor& v, double tau) {
  if (!(tau > 0.0)) throw InvalidParameter("log_softmax: temperature must be positive");
  if (v.rows() != 1) throw InvalidInput("log_softmax: expects a single row");
  const std::size_t n = v.cols();
  auto x = v.values();
  double m = -std::numeric_limits<double>::infinity();
  for (double e : x) m = std::max(m, e / tau);
  double z = 0.0;
  for (double e : x) z += std::exp(e / tau - m);
  const double lse = m + std::log(z);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = x[j] / tau - lse;
  return make_result(1, n, std::move(out), {&v}, [tau](Node& self) {
    Node& p = *self.parents[0];
    double gs = 0.0;
    for (double g : self.grad) gs += g;
    for (std::size_t j = 0; j < self.grad.size(); ++j) {
      p.grad[j] += (self.grad[j] - std::exp(self.value[j]) * gs) / tau;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (gamma.size() != c || beta.size() != c) throw InvalidInput("layer_norm: affine size mismatch");
  auto v = x.values();
  auto g = gamma.values();
  auto b = beta.values();
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = v.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xi[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xi[j] - mu) * (xi[j] - mu);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (xi[j] - mu) * is;
      xhat[i * c + j] = h;
      out[i * c + j] = h * g[j] + b[j];
    }
  }
  return make_result(
      r, c, std::move(out), {&x, &gamma, &beta},
      [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& px = *self.parents[0];
        Node& pg = *self.parents[1];
        Node& pb = *self.parents[2];
        const double n = static_cast<double>(c);
        for (std::size_t i = 0; i < r; ++i) {
          const double* go = self.grad.data() + i * c;
          const double* h = xhat.data() + i * c;
          if (pg.requires_grad || pb.requires_grad) {
            for (std::size_t j = 0; j < c; ++j) {
              if (pg.requires_grad) pg.grad[j] += go[j] * h[j];
              if (pb.requires_grad) pb.grad[j] += go[j];
            }
          }
          if (!px.requires_grad) continue;
          double s1 = 0.0;
          double s2 = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double gh = go[j] * pg.value[j];
            s1 += gh;
            s2 += gh * h[j];
          }
          for (std::size_t j = 0; j < c; ++j) {
            const double gh = go[j] * pg.value[j];
            px.grad[i * c + j] += inv_std[i] * (gh - s1 / n - h[j] * s2 / n);
          }
        }
      });
}

Tensor kl_from_log(const Tensor& logp, const Tensor& logq) {
  require_same_shape(logp, logq, "kl_from_log");
  auto lp = logp.values();
  auto lq = logq.values();
  double s = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const double p = std::exp(lp[i]);
    if (p > 0.0) s += p * (lp[i] - lq[i]);
  }
  return make_result(1, 1, {s}, {&logp, &logq}, [](Node& self) {
    Node& pp = *self.parents[0];
    Node& pq = *self.parents[1];
    const double g = self.grad[0];
    for (std::size_t i = 0; i < pp.value.size(); ++i) {
      const double p = std::exp(pp.value[i]);
      if (p == 0.0) continue;
      if (pp.requires_grad) pp.grad[i] += g * p * (pp.value[i] - pq.value[i] + 1.0);
      if (pq.requires_grad) pq.grad[i] -= g * p;
    }
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  auto x = a.values();
  auto y = b.values();
  const double n = static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return make_result(1, 1, {s / n}, {&a, &b}, [n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double g = self.grad[0];
    for (std::size_t i = 0; i < pa.value.size(); ++i) {
      const double d = 2.0 * g * (pa.value[i] - pb.value[i]) / n;
      if (pa.requires_grad) pa.grad[i] += d;
      if (pb.requires_grad) pb.grad[i] -= d;
    }
  });
}

}  // namespace lead::num
