#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lead/distill/types.hpp"
#include "lead/model/retrieval_model.hpp"
#include "lead/pipeline/config.hpp"
#include "lead/pipeline/report.hpp"
#include "lead/retrieval/metrics.hpp"
#include "lead/retrieval/mining.hpp"
#include "lead/synthdata/corpus.hpp"

namespace lead::pipeline {

// Stable 64-bit seed for a named stream of an experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream, std::size_t index = 0);

synth::SynthCorpus load_or_generate(const ExperimentConfig& cfg);

// Held-out evaluation. DE models retrieve from the whole corpus; CB and CE
// models rerank the first `rerank_depth` candidates of a fixed first-stage DE.
class Evaluator {
 public:
  Evaluator(const synth::SynthCorpus& corpus, const model::RetrievalModel& first_stage,
            std::size_t rerank_depth, std::vector<std::size_t> ks);

  retrieval::Run run(const model::RetrievalModel& m) const;
  // ("MRR@k", v), ("MAP@k", v), ("R@k", v), ("nDCG@k", v) for every k.
  std::vector<std::pair<std::string, double>> metrics(const model::RetrievalModel& m) const;
  std::vector<std::pair<std::string, double>> metrics(const retrieval::Run& run) const;
  double mrr(const model::RetrievalModel& m, std::size_t k = 10) const;

 private:
  const synth::SynthCorpus& corpus_;
  std::size_t depth_;
  std::vector<std::size_t> ks_;
  retrieval::Run first_stage_run_;
};

struct WarmupResult {
  model::RetrievalModel retriever;  // stage 1: DE with teacher_layers, random negatives
  retrieval::MinedNegatives negatives;
  std::map<model::Variant, model::RetrievalModel> teachers;  // stage 3
  model::RetrievalModel student;                             // stage 3
};

// Stage 1 trains a DE on random negatives, stage 2 mines mine_top_n hard
// negatives for the training queries, stage 3 trains teacher_variant (plus
// warmup_extra_teachers) and the student separately on the mined negatives
// with the hard loss only.
WarmupResult run_warmup(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus);

struct DistillResult {
  model::RetrievalModel student;
  std::optional<model::RetrievalModel> teacher;  // after training (== before when frozen)
  std::vector<ReportRow> rows;
  std::vector<distill::LossBreakdown> losses;    // one per step
  std::vector<std::string> warnings;
};

// "4CB -> 2DE"
std::string setting_label(const model::RetrievalModel& teacher, const model::RetrievalModel& student);

// Trains copies of `teacher` and `student` with cfg.method and evaluates the
// student, plus the teacher before and after for distillation methods.
// Student rows use cfg.method_label(); teacher rows append "/teacher_before"
// and "/teacher_after".
DistillResult run_distill(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus,
                          const model::RetrievalModel& teacher, const model::RetrievalModel& student,
                          const retrieval::MinedNegatives& negatives, const Evaluator& evaluator);

struct ChainResult {
  model::RetrievalModel student;
  std::vector<ReportRow> rows;  // method "<label>/S<i>"
};

// Distills each teacher of `teachers` in order into one persisting student.
// Step 1 is identical to run_distill with the same configuration.
ChainResult run_chain(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus,
                      const std::vector<const model::RetrievalModel*>& teachers,
                      const model::RetrievalModel& student,
                      const retrieval::MinedNegatives& negatives, const Evaluator& evaluator);

// LEAD with K = 1..student layers; method column "<label> K=<k>".
std::vector<ReportRow> sweep_k(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus,
                               const model::RetrievalModel& teacher,
                               const model::RetrievalModel& student,
                               const retrieval::MinedNegatives& negatives,
                               const Evaluator& evaluator);

// "qid<TAB>pid pid ..." per line.
void write_negatives(const retrieval::MinedNegatives& negatives, const std::string& path);
retrieval::MinedNegatives read_negatives(const std::string& path);

}  // namespace lead::pipeline
