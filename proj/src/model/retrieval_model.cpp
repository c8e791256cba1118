#include "lead/model/retrieval_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "lead/error.hpp"
#include "lead/numcore/ops.hpp"

namespace lead::model {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::DualEncoder: return "DE";
    case Variant::LateInteraction: return "CB";
    case Variant::CrossEncoder: return "CE";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "DE") return Variant::DualEncoder;
  if (name == "CB") return Variant::LateInteraction;
  if (name == "CE") return Variant::CrossEncoder;
  throw InvalidParameter("unknown model variant '" + name + "' (expected DE, CB or CE)");
}

const num::Tensor& Encoding::at(int layer) const {
  if (layer >= 1 && static_cast<std::size_t>(layer) <= layers.size()) return layers[layer - 1];
  if (static_cast<std::size_t>(layer) == layers.size() + 1 && projected.defined()) return projected;
  throw InvalidInput("layer " + std::to_string(layer) + " not present in encoding");
}

RetrievalModel::RetrievalModel(const ModelConfig& config) : config_(config) {
  std::mt19937_64 rng(config.seed);
  const std::size_t n_stacks = config.variant == Variant::CrossEncoder ? 1 : 2;
  stacks_.reserve(n_stacks);
  for (std::size_t i = 0; i < n_stacks; ++i) stacks_.emplace_back(config.encoder, rng);

  const std::size_t d = config.encoder.hidden_dim;
  if (has_projection()) {
    // Near-identity start when square, so appending does not discard warm weights.
    const std::size_t o = config.projection_dim;
    std::normal_distribution<double> noise(0.0, 0.01);
    for (std::size_t s = 0; s < n_stacks; ++s) {
      std::vector<double> w(d * o);
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < o; ++c) {
          w[r * o + c] = (r == c ? 1.0 : 0.0) + noise(rng);
        }
      }
      proj_w_[s] = num::Tensor::parameter({d, o}, std::move(w));
      proj_b_[s] = num::Tensor::parameter({1, o}, std::vector<double>(o, 0.0));
    }
  }
  if (config.variant == Variant::CrossEncoder) {
    const std::size_t o = output_dim();
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(o)));
    std::vector<double> w(o);
    for (double& x : w) x = dist(rng);
    ce_weight_ = num::Tensor::parameter({1, o}, std::move(w));
  }
}

int RetrievalModel::effective_layers() const {
  return static_cast<int>(num_layers()) + (has_projection() ? 1 : 0);
}

std::size_t RetrievalModel::output_dim() const {
  return has_projection() ? config_.projection_dim : config_.encoder.hidden_dim;
}

std::size_t RetrievalModel::max_sequence_length() const {
  // CE packs [CLS] q [SEP] p into one encoder input.
  return config_.encoder.max_positions - 1;
}

Encoding RetrievalModel::finish(std::vector<num::Tensor> layers, const num::Tensor& proj_w,
                                const num::Tensor& proj_b) const {
  Encoding e;
  e.layers = std::move(layers);
  if (has_projection()) e.projected = num::add_row(num::matmul(e.layers.back(), proj_w), proj_b);
  return e;
}

Encoding RetrievalModel::encode_query(const TokenSequence& q) const {
  if (variant() == Variant::CrossEncoder) throw InvalidInput("cross encoder has no query encoder");
  return finish(stacks_[0].encode_all_layers(q), proj_w_[0], proj_b_[0]);
}

Encoding RetrievalModel::encode_passage(const TokenSequence& p) const {
  if (variant() == Variant::CrossEncoder) throw InvalidInput("cross encoder has no passage encoder");
  return finish(stacks_[1].encode_all_layers(p), proj_w_[1], proj_b_[1]);
}

Encoding RetrievalModel::encode_pair(const TokenSequence& q, const TokenSequence& p) const {
  if (variant() != Variant::CrossEncoder) throw InvalidInput("pair encoding requires a cross encoder");
  const std::size_t vocab = config_.encoder.vocab_size;
  validate(q, vocab, config_.encoder.max_positions);
  validate(p, vocab, config_.encoder.max_positions);
  std::vector<std::int32_t> ids;
  ids.reserve(q.ids.size() + p.ids.size() + 2);
  ids.push_back(kClsId);
  ids.insert(ids.end(), q.ids.begin(), q.ids.end());
  ids.push_back(kSepId);
  ids.insert(ids.end(), p.ids.begin(), p.ids.end());
  return finish(stacks_[0].encode_ids(ids), proj_w_[0], proj_b_[0]);
}

void RetrievalModel::check_layer(int layer) const {
  if (layer < 1 || layer > effective_layers()) {
    throw InvalidInput("layer index " + std::to_string(layer) + " outside [1, " +
                       std::to_string(effective_layers()) + "]");
  }
}

num::Tensor late_interaction(const num::Tensor& q_tokens, const num::Tensor& p_tokens) {
  return num::sum(num::row_max(num::matmul_nt(q_tokens, p_tokens)));
}

num::Tensor RetrievalModel::score(int layer, const Encoding& query, const Encoding& passage) const {
  const Encoding* pool[] = {&passage};
  const Encoding* pair[] = {&query};
  if (variant() == Variant::CrossEncoder) return num::element(pool_scores(layer, nullptr, pair), 0);
  return num::element(pool_scores(layer, &query, pool), 0);
}

num::Tensor RetrievalModel::pool_scores(int layer, const Encoding* query,
                                        std::span<const Encoding* const> pool) const {
  check_layer(layer);
  if (pool.empty()) throw InvalidInput("empty candidate pool");
  const bool top = layer == effective_layers();
  switch (variant()) {
    case Variant::DualEncoder:
    case Variant::LateInteraction: {
      if (query == nullptr) throw InvalidInput("query encoding required");
      const num::Tensor& q = query->at(layer);
      const bool cls_only = variant() == Variant::DualEncoder ||
                            (config_.cb_cls_only_intermediate && !top);
      if (cls_only) {
        std::vector<num::Tensor> rows;
        rows.reserve(pool.size());
        for (const Encoding* p : pool) rows.push_back(num::row(p->at(layer), 0));
        return num::matmul_nt(num::row(q, 0), num::stack_rows(rows));
      }
      std::vector<num::Tensor> scores;
      scores.reserve(pool.size());
      for (const Encoding* p : pool) scores.push_back(late_interaction(q, p->at(layer)));
      return num::concat_cols(scores);
    }
    case Variant::CrossEncoder: {
      std::vector<num::Tensor> rows;
      rows.reserve(pool.size());
      for (const Encoding* p : pool) rows.push_back(num::row(p->at(layer), 0));
      return num::matmul_nt(ce_weight_, num::stack_rows(rows));
    }
  }
  throw InvalidInput("unknown variant");
}

num::Tensor RetrievalModel::layer_score(int layer, const TokenSequence& q,
                                        const TokenSequence& p) const {
  check_layer(layer);
  if (variant() == Variant::CrossEncoder) return score(layer, encode_pair(q, p), Encoding{});
  return score(layer, encode_query(q), encode_passage(p));
}

num::Tensor RetrievalModel::final_score(const TokenSequence& q, const TokenSequence& p) const {
  return layer_score(effective_layers(), q, p);
}

std::vector<double> RetrievalModel::embed_query(const TokenSequence& q) const {
  num::NoGradGuard no_grad;
  const auto cls = num::row(encode_query(q).at(effective_layers()), 0);
  return {cls.values().begin(), cls.values().end()};
}

std::vector<double> RetrievalModel::embed_passage(const TokenSequence& p) const {
  num::NoGradGuard no_grad;
  const auto cls = num::row(encode_passage(p).at(effective_layers()), 0);
  return {cls.values().begin(), cls.values().end()};
}

std::vector<NamedTensor> RetrievalModel::named_parameters() const {
  std::vector<NamedTensor> out;
  if (variant() == Variant::CrossEncoder) {
    stacks_[0].collect_parameters("joint.", out);
  } else {
    stacks_[0].collect_parameters("query.", out);
    stacks_[1].collect_parameters("passage.", out);
  }
  if (has_projection()) {
    const char* names[] = {variant() == Variant::CrossEncoder ? "joint." : "query.", "passage."};
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
      out.emplace_back(std::string(names[s]) + "projection.w", proj_w_[s]);
      out.emplace_back(std::string(names[s]) + "projection.b", proj_b_[s]);
    }
  }
  if (variant() == Variant::CrossEncoder) out.emplace_back("ce.w", ce_weight_);
  return out;
}

std::vector<num::Tensor> RetrievalModel::parameters() const {
  std::vector<num::Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

void RetrievalModel::set_trainable(bool on) {
  trainable_ = on;
  for (auto& t : parameters()) t.set_requires_grad(on);
}

RetrievalModel RetrievalModel::clone() const {
  RetrievalModel copy(config_);
  auto src = named_parameters();
  auto dst = copy.named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto from = src[i].second.values();
    std::copy(from.begin(), from.end(), dst[i].second.data().begin());
  }
  copy.set_trainable(trainable_);
  return copy;
}

double score_de(std::span<const double> q_cls, std::span<const double> p_cls) {
  if (q_cls.size() != p_cls.size()) throw InvalidInput("score_de: dimension mismatch");
  if (q_cls.empty()) throw InvalidInput("score_de: empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < q_cls.size(); ++i) s += q_cls[i] * p_cls[i];
  return s;
}

double score_cb(std::span<const double> q_tokens, std::size_t x_len,
                std::span<const double> p_tokens, std::size_t y_len, std::size_t dim) {
  if (x_len == 0 || y_len == 0) throw InvalidInput("score_cb: empty token sequence");
  if (dim == 0 || q_tokens.size() != x_len * dim || p_tokens.size() != y_len * dim) {
    throw InvalidInput("score_cb: token matrices do not match their dimensions");
  }
  double total = 0.0;
  for (std::size_t x = 0; x < x_len; ++x) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < y_len; ++y) {
      best = std::max(best, score_de(q_tokens.subspan(x * dim, dim), p_tokens.subspan(y * dim, dim)));
    }
    total += best;
  }
  return total;
}

double score_ce(std::span<const double> joint_cls, std::span<const double> w) {
  if (joint_cls.size() != w.size()) throw InvalidInput("score_ce: dimension mismatch");
  return score_de(w, joint_cls);
}

}  // namespace lead::model
