#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lead/model/tokens.hpp"
#include "lead/numcore/tensor.hpp"

namespace lead::model {

struct EncoderConfig {
  std::size_t vocab_size = 512;
  std::size_t hidden_dim = 32;
  std::size_t ff_dim = 64;
  std::size_t num_layers = 2;
  std::size_t max_positions = 64;  // including the CLS (and SEP) slots
};

using NamedTensor = std::pair<std::string, num::Tensor>;

// Token + position embedding followed by num_layers post-norm blocks of
// single-head self-attention and a GELU feed-forward, each with a residual.
class EncoderStack {
 public:
  EncoderStack(const EncoderConfig& config, std::mt19937_64& rng);

  const EncoderConfig& config() const { return config_; }
  std::size_t num_layers() const { return blocks_.size(); }
  std::size_t hidden_dim() const { return config_.hidden_dim; }

  // Output of every block for [CLS] + seq; entry i has shape (len + 1, hidden_dim).
  std::vector<num::Tensor> encode_all_layers(const TokenSequence& seq) const;
  // Same for an already assembled id list (no CLS added).
  std::vector<num::Tensor> encode_ids(std::span<const std::int32_t> ids) const;

  void collect_parameters(const std::string& prefix, std::vector<NamedTensor>& out) const;

 private:
  struct Block {
    num::Tensor wq, wk, wv, wo;
    num::Tensor ln1_gamma, ln1_beta;
    num::Tensor w1, b1, w2, b2;
    num::Tensor ln2_gamma, ln2_beta;
  };

  num::Tensor forward_block(const Block& b, const num::Tensor& x) const;

  EncoderConfig config_;
  num::Tensor token_embedding_;
  num::Tensor position_embedding_;
  std::vector<Block> blocks_;
};

}  // namespace lead::model
