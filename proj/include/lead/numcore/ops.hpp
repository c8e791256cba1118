#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lead/numcore/tensor.hpp"

namespace lead::num {

// Linear algebra
Tensor matmul(const Tensor& a, const Tensor& b);     // a · b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a · bᵀ

// Elementwise (equal shapes)
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// Adds a 1×c row to every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor gelu(const Tensor& a);  // tanh approximation

// Reductions
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor row_max(const Tensor& a);  // r×1, gradient routed to the first maximiser
Tensor dot(const Tensor& a, const Tensor& b);

// Indexing and assembly
Tensor row(const Tensor& a, std::size_t i);
Tensor element(const Tensor& a, std::size_t i);
Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids);
Tensor stack_rows(const std::vector<Tensor>& rows);
Tensor concat_cols(const std::vector<Tensor>& parts);
// Prefix rows [0, count).
Tensor take_rows(const Tensor& a, std::size_t count);

// Normalisation
Tensor softmax_rows(const Tensor& a);
// log softmax(v / tau) over all entries of a single row.
Tensor log_softmax(const Tensor& v, double tau = 1.0);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Σ exp(logp)·(logp − logq); arguments are log-probabilities.
Tensor kl_from_log(const Tensor& logp, const Tensor& logq);
Tensor mse(const Tensor& a, const Tensor& b);

}  // namespace lead::num
