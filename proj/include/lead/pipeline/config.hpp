#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lead/distill/trainer.hpp"
#include "lead/distill/types.hpp"
#include "lead/model/retrieval_model.hpp"
#include "lead/synthdata/corpus.hpp"

namespace lead::pipeline {

struct ExperimentConfig {
  // Empty: generate from `corpus`.
  std::string corpus_dir;
  synth::CorpusSpec corpus;

  model::Variant teacher_variant = model::Variant::LateInteraction;
  std::size_t teacher_layers = 4;
  std::size_t student_layers = 2;  // the student is always a DE
  std::size_t hidden_dim = 32;
  std::size_t ff_dim = 64;
  std::size_t max_positions = 64;
  std::size_t teacher_projection_dim = 0;
  std::size_t student_projection_dim = 0;
  bool cb_cls_only_intermediate = false;

  distill::Method method = distill::Method::Layerwise;
  // Cross-batch negatives on for DE/CB training; CE pairs never use them.
  distill::DistillConfig distill{.in_batch_negatives = true};
  distill::OptimSettings optim;
  std::size_t batch_size = 8;
  std::size_t negative_size = 4;

  // Warmup stages 1 and 3.
  std::size_t warmup_steps = 500;
  double warmup_learning_rate = 3e-3;
  std::size_t mine_top_n = 20;
  // Extra teacher variants trained during warmup besides teacher_variant.
  std::vector<model::Variant> warmup_extra_teachers;

  std::vector<std::size_t> eval_ks = {10};
  // CB/CE candidates reranked per query from the first-stage DE.
  std::size_t rerank_depth = 50;

  // Teachers of a continual-distillation chain, in order.
  std::vector<model::Variant> chain = {model::Variant::DualEncoder,
                                       model::Variant::LateInteraction,
                                       model::Variant::CrossEncoder};

  std::uint64_t seed = 1;
  // Method column in reports; empty uses the method name.
  std::string label;
  std::string output_dir = "lead_out";
  bool trace = false;

  // Throws InvalidParameter naming the first inconsistent field.
  void validate() const;
  std::string method_label() const;
  model::ModelConfig teacher_model(model::Variant v) const;
  model::ModelConfig student_model() const;
};

ExperimentConfig desk_preset();
// Published large-scale hyper-parameters. Stored for reference; running it
// at this scale is impractical.
ExperimentConfig paper_preset();
ExperimentConfig preset(const std::string& name);

// Flat key = value access. Keys are listed by config_keys().
std::vector<std::string> config_keys();
std::string config_help(const std::string& key);
void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const ExperimentConfig& cfg, const std::string& key);
std::map<std::string, std::string> to_map(const ExperimentConfig& cfg);

// "key = value" lines; '#' starts a comment. A "preset" key, when present,
// is applied before every other key in the file.
void load_config_file(ExperimentConfig& cfg, const std::string& path);
void write_config_file(const ExperimentConfig& cfg, const std::string& path);
// Applies PREFIX<KEY> variables (key upper-cased), e.g. LEAD_STEPS=100.
// Returns the keys that were overridden.
std::vector<std::string> apply_env(ExperimentConfig& cfg, const std::string& prefix = "LEAD_");

}  // namespace lead::pipeline
