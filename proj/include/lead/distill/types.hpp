#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lead/model/tokens.hpp"

namespace lead::distill {

struct Passage {
  std::string id;
  model::TokenSequence tokens;
};

// One query with its candidate pool: positives first, then negatives. The
// label is one-hot on the first positive.
struct TrainExample {
  std::string query_id;
  model::TokenSequence query;
  std::vector<Passage> positives;
  std::vector<Passage> negatives;

  std::size_t pool_size() const { return positives.size() + negatives.size(); }
  const Passage& pool_at(std::size_t i) const;
  std::vector<double> label() const;
  void validate() const;
};

// Reference to slot `slot` of example `example` within a batch.
struct PoolRef {
  std::size_t example = 0;
  std::size_t slot = 0;
  bool operator==(const PoolRef&) const = default;
};

struct Batch {
  std::vector<TrainExample> examples;
  // Per example: other examples' passages that are not relevant to it, in
  // batch order. Used only when in-batch negatives are enabled.
  std::vector<std::vector<PoolRef>> in_batch;
};

struct LayerFeature {
  int layer_index = 0;
  std::vector<double> dist;
};

// Paired 1-based layer indices, both strictly increasing and of equal length.
struct LayerSelection {
  std::vector<int> teacher;
  std::vector<int> student;
  bool operator==(const LayerSelection&) const = default;
};

enum class SelectionStrategy { Random, Last, Skip };

const char* strategy_name(SelectionStrategy s);
SelectionStrategy parse_strategy(const std::string& name);

// Where the temperature enters the layer and response KL terms.
//   Logits:  KL(softmax(t/τ) ‖ softmax(s/τ))
//   Literal: KL between the untempered distributions, divided by τ
enum class TauPlacement { Logits, Literal };

enum class Method { StudentOnly, Response, Feature, Layerwise };

const char* method_name(Method m);  // student_only, RD, FD, LEAD
Method parse_method(const std::string& name);

struct DistillConfig {
  std::size_t K = 2;
  double tau = 1.0;
  SelectionStrategy strategy = SelectionStrategy::Random;
  std::size_t skip_stride = 2;
  bool joint_training = true;
  bool layer_reweighting = true;
  bool in_batch_negatives = false;
  std::uint64_t seed = 0;
  TauPlacement tau_placement = TauPlacement::Logits;
  // Multipliers on the distillation terms; zero removes a term entirely.
  double layer_loss_scale = 1.0;
  double response_loss_scale = 1.0;
  double feature_loss_scale = 1.0;
};

struct LossBreakdown {
  double l_lyr = 0.0;
  double l_rep = 0.0;
  double l_tch = 0.0;
  double l_stu = 0.0;
  double l_fd = 0.0;  // feature baseline only
  double total = 0.0;
  std::vector<double> weights;
};

}  // namespace lead::distill
