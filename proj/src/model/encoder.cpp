#include "lead/model/encoder.hpp"

#include <cmath>

#include "lead/error.hpp"
#include "lead/numcore/ops.hpp"

namespace lead::model {

namespace {

num::Tensor random_param(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = dist(rng);
  return num::Tensor::parameter({rows, cols}, std::move(v));
}

num::Tensor filled_param(std::size_t cols, double value) {
  return num::Tensor::parameter({1, cols}, std::vector<double>(cols, value));
}

}  // namespace

EncoderStack::EncoderStack(const EncoderConfig& config, std::mt19937_64& rng) : config_(config) {
  if (config.vocab_size <= static_cast<std::size_t>(kFirstContentId) || config.hidden_dim == 0 ||
      config.ff_dim == 0 || config.num_layers == 0 || config.max_positions < 2) {
    throw InvalidParameter("encoder configuration has an empty dimension");
  }
  const std::size_t d = config.hidden_dim;
  const std::size_t f = config.ff_dim;
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  const double sf = 1.0 / std::sqrt(static_cast<double>(f));
  token_embedding_ = random_param(config.vocab_size, d, 1.0, rng);
  position_embedding_ = random_param(config.max_positions, d, 0.1, rng);
  blocks_.reserve(config.num_layers);
  for (std::size_t i = 0; i < config.num_layers; ++i) {
    Block b;
    b.wq = random_param(d, d, sd, rng);
    b.wk = random_param(d, d, sd, rng);
    b.wv = random_param(d, d, sd, rng);
    b.wo = random_param(d, d, sd, rng);
    b.ln1_gamma = filled_param(d, 1.0);
    b.ln1_beta = filled_param(d, 0.0);
    b.w1 = random_param(d, f, sd, rng);
    b.b1 = filled_param(f, 0.0);
    b.w2 = random_param(f, d, sf, rng);
    b.b2 = filled_param(d, 0.0);
    b.ln2_gamma = filled_param(d, 1.0);
    b.ln2_beta = filled_param(d, 0.0);
    blocks_.push_back(std::move(b));
  }
}

std::vector<num::Tensor> EncoderStack::encode_all_layers(const TokenSequence& seq) const {
  validate(seq, config_.vocab_size, config_.max_positions - 1);
  std::vector<std::int32_t> ids;
  ids.reserve(seq.ids.size() + 1);
  ids.push_back(kClsId);
  ids.insert(ids.end(), seq.ids.begin(), seq.ids.end());
  return encode_ids(ids);
}

std::vector<num::Tensor> EncoderStack::encode_ids(std::span<const std::int32_t> ids) const {
  if (ids.empty()) throw InvalidInput("cannot encode an empty sequence");
  if (ids.size() > config_.max_positions) {
    throw InvalidInput("sequence of " + std::to_string(ids.size()) + " positions exceeds maximum " +
                       std::to_string(config_.max_positions));
  }
  num::Tensor x = num::add(num::gather_rows(token_embedding_, ids),
                           num::take_rows(position_embedding_, ids.size()));
  std::vector<num::Tensor> outputs;
  outputs.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    x = forward_block(b, x);
    outputs.push_back(x);
  }
  return outputs;
}

num::Tensor EncoderStack::forward_block(const Block& b, const num::Tensor& x) const {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.hidden_dim));
  num::Tensor q = num::matmul(x, b.wq);
  num::Tensor k = num::matmul(x, b.wk);
  num::Tensor v = num::matmul(x, b.wv);
  num::Tensor att = num::softmax_rows(num::scale(num::matmul_nt(q, k), inv_sqrt_d));
  num::Tensor mixed = num::matmul(num::matmul(att, v), b.wo);
  num::Tensor h = num::layer_norm(num::add(x, mixed), b.ln1_gamma, b.ln1_beta);

  num::Tensor ff = num::gelu(num::add_row(num::matmul(h, b.w1), b.b1));
  ff = num::add_row(num::matmul(ff, b.w2), b.b2);
  return num::layer_norm(num::add(h, ff), b.ln2_gamma, b.ln2_beta);
}

void EncoderStack::collect_parameters(const std::string& prefix,
                                      std::vector<NamedTensor>& out) const {
  out.emplace_back(prefix + "token_embedding", token_embedding_);
  out.emplace_back(prefix + "position_embedding", position_embedding_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    const std::string p = prefix + "block" + std::to_string(i + 1) + ".";
    out.emplace_back(p + "wq", b.wq);
    out.emplace_back(p + "wk", b.wk);
    out.emplace_back(p + "wv", b.wv);
    out.emplace_back(p + "wo", b.wo);
    out.emplace_back(p + "ln1_gamma", b.ln1_gamma);
    out.emplace_back(p + "ln1_beta", b.ln1_beta);
    out.emplace_back(p + "w1", b.w1);
    out.emplace_back(p + "b1", b.b1);
    out.emplace_back(p + "w2", b.w2);
    out.emplace_back(p + "b2", b.b2);
    out.emplace_back(p + "ln2_gamma", b.ln2_gamma);
    out.emplace_back(p + "ln2_beta", b.ln2_beta);
  }
}

}  // namespace lead::model
