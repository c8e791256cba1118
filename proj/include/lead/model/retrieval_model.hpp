#pragma once

// Unified retrieval-model view: two aligned piles of layers (E1, E2) and a
// similarity function.
//
//   DE  E1 = query encoder, E2 = passage encoder, score = CLS · CLS
//   CB  E1/E2 as DE, score = Σ_x max_y q_x · p_y over token representations
//   CE  E1 = joint encoder over [CLS] q [SEP] p, E2 = shared vector w,
//       score = w · CLS
//
// Layers are addressed 1..num_layers; with an appended projection the
// projected final representation is one more addressable layer.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lead/model/encoder.hpp"
#include "lead/model/tokens.hpp"
#include "lead/numcore/tensor.hpp"

namespace lead::model {

enum class Variant { DualEncoder, LateInteraction, CrossEncoder };

const char* variant_name(Variant v);  // "DE", "CB", "CE"
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::DualEncoder;
  EncoderConfig encoder;
  std::size_t projection_dim = 0;  // 0 disables the appended projection
  // Late interaction scores intermediate layers by CLS product only.
  bool cb_cls_only_intermediate = false;
  std::uint64_t seed = 0;
};

// Per-layer token representations for one side of a DE/CB model, or for a
// joint CE input.
struct Encoding {
  std::vector<num::Tensor> layers;
  num::Tensor projected;  // defined only when the model has a projection

  // 1-based; num_layers + 1 addresses the projection.
  const num::Tensor& at(int layer) const;
};

class RetrievalModel {
 public:
  explicit RetrievalModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  Variant variant() const { return config_.variant; }
  std::size_t num_layers() const { return config_.encoder.num_layers; }
  int effective_layers() const;
  bool has_projection() const { return config_.projection_dim > 0; }
  std::size_t output_dim() const;
  std::size_t max_sequence_length() const;

  // DE/CB only.
  Encoding encode_query(const TokenSequence& q) const;
  Encoding encode_passage(const TokenSequence& p) const;
  // CE only.
  Encoding encode_pair(const TokenSequence& q, const TokenSequence& p) const;

  // Score of one (query, passage) pair at a layer. For DE/CB pass the query
  // and passage encodings; for CE pass the pair encoding as `query` and an
  // empty encoding as `passage`.
  num::Tensor score(int layer, const Encoding& query, const Encoding& passage) const;
  // 1×n logits of one query against a pool at a layer. For CE, `query` is
  // ignored and `pool` holds pair encodings.
  num::Tensor pool_scores(int layer, const Encoding* query,
                          std::span<const Encoding* const> pool) const;

  // Convenience: encode and score a single pair.
  num::Tensor layer_score(int layer, const TokenSequence& q, const TokenSequence& p) const;
  num::Tensor final_score(const TokenSequence& q, const TokenSequence& p) const;

  // Retrieval embedding (top-layer CLS) of a DE model.
  std::vector<double> embed_query(const TokenSequence& q) const;
  std::vector<double> embed_passage(const TokenSequence& p) const;

  std::vector<NamedTensor> named_parameters() const;
  std::vector<num::Tensor> parameters() const;
  void set_trainable(bool on);
  bool trainable() const { return trainable_; }

  // Independent copy with identical parameter values.
  RetrievalModel clone() const;

 private:
  Encoding finish(std::vector<num::Tensor> layers, const num::Tensor& proj_w,
                  const num::Tensor& proj_b) const;
  void check_layer(int layer) const;

  ModelConfig config_;
  std::vector<EncoderStack> stacks_;  // DE/CB: query, passage. CE: joint.
  num::Tensor ce_weight_;             // CE only, 1×output_dim
  num::Tensor proj_w_[2];             // per stack
  num::Tensor proj_b_[2];
  bool trainable_ = true;
};

// Reference similarity functions on plain arrays.
double score_de(std::span<const double> q_cls, std::span<const double> p_cls);
// q is X×d and p is Y×d, both row-major.
double score_cb(std::span<const double> q_tokens, std::size_t x_len,
                std::span<const double> p_tokens, std::size_t y_len, std::size_t dim);
double score_ce(std::span<const double> joint_cls, std::span<const double> w);

// Graph versions used by the scoring paths above.
num::Tensor late_interaction(const num::Tensor& q_tokens, const num::Tensor& p_tokens);

}  // namespace lead::model
