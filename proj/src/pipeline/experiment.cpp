#include "lead/pipeline/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "lead/distill/trainer.hpp"
#include "lead/error.hpp"
#include "lead/synthdata/batching.hpp"

namespace lead::pipeline {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

distill::OptimSettings warmup_optim(const ExperimentConfig& cfg) {
  distill::OptimSettings o = cfg.optim;
  o.learning_rate = cfg.warmup_learning_rate;
  o.total_steps = cfg.warmup_steps;
  return o;
}

synth::BatchOptions batch_options(const ExperimentConfig& cfg, synth::NegativeSource source,
                                  bool in_batch, std::uint64_t seed) {
  synth::BatchOptions b;
  b.source = source;
  b.negative_size = cfg.negative_size;
  b.batch_size = cfg.batch_size;
  b.in_batch = in_batch;
  b.seed = seed;
  return b;
}

// Trains `m` alone with the hard loss.
void train_alone(model::RetrievalModel& m, const ExperimentConfig& cfg,
                 const synth::SynthCorpus& corpus, synth::BatchOptions options,
                 const retrieval::MinedNegatives* mined, std::vector<std::string>* warnings) {
  synth::BatchSampler sampler(corpus.passages, corpus.train_queries, corpus.qrels, options,
                              mined ? &mined->lists : nullptr);
  distill::DistillConfig dc = cfg.distill;
  dc.in_batch_negatives = options.in_batch;
  distill::Trainer trainer(nullptr, m, dc, distill::Method::StudentOnly, warmup_optim(cfg));
  for (std::size_t s = 0; s < cfg.warmup_steps; ++s) trainer.train_step(sampler.next());
  if (warnings) warnings->insert(warnings->end(), sampler.warnings().begin(), sampler.warnings().end());
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

std::vector<ReportRow> rows_for(const std::string& setting, const std::string& method,
                                std::uint64_t seed,
                                const std::vector<std::pair<std::string, double>>& metrics) {
  std::vector<ReportRow> rows;
  for (const auto& [name, value] : metrics) rows.push_back({setting, method, name, seed, value});
  return rows;
}

struct StepOutcome {
  std::vector<distill::LossBreakdown> losses;
  std::vector<std::string> warnings;
};

// One distillation run of cfg.method; `index` separates the random streams
// of successive chain steps.
StepOutcome distill_step(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus,
                         model::RetrievalModel* teacher, model::RetrievalModel& student,
                         const retrieval::MinedNegatives& negatives, std::size_t index,
                         const std::string& trace_name) {
  cfg.validate();
  if (cfg.method != distill::Method::StudentOnly) {
    if (teacher == nullptr) throw InvalidInput("distillation requires a teacher");
    if (teacher->effective_layers() < student.effective_layers()) {
      throw InvalidInput("teacher has fewer layers than the student");
    }
    if (teacher->config().encoder.vocab_size != student.config().encoder.vocab_size) {
      throw InvalidInput("teacher and student vocabularies differ");
    }
  }
  if (student.variant() != model::Variant::DualEncoder) {
    throw InvalidInput("the distilled student must be a DE");
  }
  StepOutcome out;
  distill::DistillConfig dc = cfg.distill;
  dc.seed = derive_seed(cfg.seed, "distill", index);
  const bool in_batch = dc.in_batch_negatives &&
                        (teacher == nullptr || teacher->variant() != model::Variant::CrossEncoder);
  synth::BatchSampler sampler(
      corpus.passages, corpus.train_queries, corpus.qrels,
      batch_options(cfg, synth::NegativeSource::Mined, in_batch, derive_seed(cfg.seed, "batches", index)),
      &negatives.lists);
  distill::Trainer trainer(cfg.method == distill::Method::StudentOnly ? nullptr : teacher, student,
                           dc, cfg.method, cfg.optim);
  std::unique_ptr<std::ofstream> trace;
  if (cfg.trace) {
    std::filesystem::create_directories(cfg.output_dir);
    const auto path = std::filesystem::path(cfg.output_dir) / ("trace_" + file_safe(trace_name) + ".tsv");
    trace = std::make_unique<std::ofstream>(path);
    if (!*trace) throw IoError("cannot write " + path.string());
    trainer.set_trace(trace.get());
  }
  out.losses.reserve(cfg.optim.total_steps);
  for (std::size_t s = 0; s < cfg.optim.total_steps; ++s) out.losses.push_back(trainer.train_step(sampler.next()));
  out.warnings = sampler.warnings();
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream, std::size_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix(splitmix(seed) ^ h ^ splitmix(static_cast<std::uint64_t>(index) + 0x51ULL));
}

synth::SynthCorpus load_or_generate(const ExperimentConfig& cfg) {
  if (!cfg.corpus_dir.empty()) return synth::load_corpus(cfg.corpus_dir);
  return synth::generate(cfg.corpus);
}

Evaluator::Evaluator(const synth::SynthCorpus& corpus, const model::RetrievalModel& first_stage,
                     std::size_t rerank_depth, std::vector<std::size_t> ks)
    : corpus_(corpus), depth_(rerank_depth), ks_(std::move(ks)) {
  if (ks_.empty()) throw InvalidParameter("evaluation needs at least one depth k");
  if (depth_ == 0) throw InvalidParameter("rerank depth must be at least 1");
  first_stage_run_ = retrieval::retrieve(first_stage, retrieval::build_index(first_stage, corpus.passages),
                                         corpus.eval_queries, depth_);
}

retrieval::Run Evaluator::run(const model::RetrievalModel& m) const {
  if (m.variant() == model::Variant::DualEncoder) {
    const std::size_t k = *std::max_element(ks_.begin(), ks_.end());
    return retrieval::retrieve(m, retrieval::build_index(m, corpus_.passages), corpus_.eval_queries, k);
  }
  return retrieval::rerank_run(m, first_stage_run_, corpus_.eval_queries, corpus_.passages, depth_);
}

std::vector<std::pair<std::string, double>> Evaluator::metrics(const retrieval::Run& run) const {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t k : ks_) {
    const auto m = retrieval::evaluate_run(run, corpus_.qrels, k);
    const std::string at = "@" + std::to_string(k);
    out.emplace_back("MRR" + at, m.mrr);
    out.emplace_back("MAP" + at, m.map);
    out.emplace_back("R" + at, m.recall);
    out.emplace_back("nDCG" + at, m.ndcg);
  }
  return out;
}

std::vector<std::pair<std::string, double>> Evaluator::metrics(const model::RetrievalModel& m) const {
  return metrics(run(m));
}

double Evaluator::mrr(const model::RetrievalModel& m, std::size_t k) const {
  return retrieval::mrr_at_k(run(m), corpus_.qrels, k);
}

WarmupResult run_warmup(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus) {
  cfg.validate();
  std::vector<std::string> warnings;

  model::ModelConfig rc = cfg.teacher_model(model::Variant::DualEncoder);
  rc.projection_dim = 0;
  rc.seed = derive_seed(cfg.seed, "stage1-model");
  model::RetrievalModel retriever(rc);
  train_alone(retriever, cfg, corpus,
              batch_options(cfg, synth::NegativeSource::Random, false, derive_seed(cfg.seed, "stage1-batches")),
              nullptr, &warnings);

  retrieval::MinedNegatives mined = retrieval::mine_hard_negatives(
      retriever, corpus.passages, corpus.train_queries, corpus.qrels, cfg.mine_top_n);

  std::vector<model::Variant> variants{cfg.teacher_variant};
  for (auto v : cfg.warmup_extra_teachers) {
    if (std::find(variants.begin(), variants.end(), v) == variants.end()) variants.push_back(v);
  }
  std::map<model::Variant, model::RetrievalModel> teachers;
  for (auto v : variants) {
    model::ModelConfig tc = cfg.teacher_model(v);
    const std::string name = model::variant_name(v);
    tc.seed = derive_seed(cfg.seed, "teacher-model-" + name);
    model::RetrievalModel t(tc);
    train_alone(t, cfg, corpus,
                batch_options(cfg, synth::NegativeSource::Mined,
                              cfg.distill.in_batch_negatives && v != model::Variant::CrossEncoder,
                              derive_seed(cfg.seed, "teacher-batches-" + name)),
                &mined, &warnings);
    teachers.emplace(v, std::move(t));
  }

  model::ModelConfig sc = cfg.student_model();
  sc.seed = derive_seed(cfg.seed, "student-model");
  model::RetrievalModel student(sc);
  train_alone(student, cfg, corpus,
              batch_options(cfg, synth::NegativeSource::Mined, cfg.distill.in_batch_negatives,
                            derive_seed(cfg.seed, "student-batches")),
              &mined, &warnings);

  mined.warnings.insert(mined.warnings.end(), warnings.begin(), warnings.end());
  return WarmupResult{std::move(retriever), std::move(mined), std::move(teachers), std::move(student)};
}

std::string setting_label(const model::RetrievalModel& teacher, const model::RetrievalModel& student) {
  return std::to_string(teacher.num_layers()) + model::variant_name(teacher.variant()) + " -> " +
         std::to_string(student.num_layers()) + model::variant_name(student.variant());
}

DistillResult run_distill(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus,
                          const model::RetrievalModel& teacher, const model::RetrievalModel& student,
                          const retrieval::MinedNegatives& negatives, const Evaluator& evaluator) {
  const std::string label = cfg.method_label();
  const std::string setting = setting_label(teacher, student);
  const bool uses_teacher = cfg.method != distill::Method::StudentOnly;

  DistillResult r{student.clone(), std::nullopt, {}, {}, {}};
  if (uses_teacher) r.teacher = teacher.clone();
  std::vector<ReportRow> before;
  if (uses_teacher) before = rows_for(setting, label + "/teacher_before", cfg.seed, evaluator.metrics(teacher));

  auto outcome = distill_step(cfg, corpus, r.teacher ? &*r.teacher : nullptr, r.student, negatives, 0,
                              label + "_seed" + std::to_string(cfg.seed));
  r.losses = std::move(outcome.losses);
  r.warnings = std::move(outcome.warnings);

  r.rows = rows_for(setting, label, cfg.seed, evaluator.metrics(r.student));
  if (uses_teacher) {
    r.rows.insert(r.rows.end(), before.begin(), before.end());
    auto after = rows_for(setting, label + "/teacher_after", cfg.seed, evaluator.metrics(*r.teacher));
    r.rows.insert(r.rows.end(), after.begin(), after.end());
  }
  return r;
}

ChainResult run_chain(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus,
                      const std::vector<const model::RetrievalModel*>& teachers,
                      const model::RetrievalModel& student,
                      const retrieval::MinedNegatives& negatives, const Evaluator& evaluator) {
  if (teachers.empty()) throw InvalidInput("a chain needs at least one teacher");
  const std::string label = cfg.method_label();
  ChainResult r{student.clone(), {}};
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    if (teachers[i] == nullptr) throw InvalidInput("null chain teacher");
    model::RetrievalModel t = teachers[i]->clone();
    const std::string step = "S" + std::to_string(i + 1);
    distill_step(cfg, corpus, &t, r.student, negatives, i,
                 label + "_" + step + "_seed" + std::to_string(cfg.seed));
    auto rows = rows_for(setting_label(t, r.student), label + "/" + step, cfg.seed,
                         evaluator.metrics(r.student));
    r.rows.insert(r.rows.end(), rows.begin(), rows.end());
  }
  return r;
}

std::vector<ReportRow> sweep_k(const ExperimentConfig& cfg, const synth::SynthCorpus& corpus,
                               const model::RetrievalModel& teacher,
                               const model::RetrievalModel& student,
                               const retrieval::MinedNegatives& negatives,
                               const Evaluator& evaluator) {
  std::vector<ReportRow> rows;
  const std::string base = cfg.label.empty() ? "LEAD" : cfg.label;
  for (std::size_t k = 1; k <= static_cast<std::size_t>(student.effective_layers()); ++k) {
    ExperimentConfig c = cfg;
    c.method = distill::Method::Layerwise;
    c.distill.K = k;
    c.label = base + " K=" + std::to_string(k);
    auto r = run_distill(c, corpus, teacher, student, negatives, evaluator);
    for (auto& row : r.rows) {
      if (row.method == c.label) rows.push_back(row);
    }
  }
  return rows;
}

void write_negatives(const retrieval::MinedNegatives& negatives, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [qid, list] : negatives.lists) {
    out << qid << '\t';
    for (std::size_t i = 0; i < list.size(); ++i) out << (i ? " " : "") << list[i];
    out << '\n';
  }
}

retrieval::MinedNegatives read_negatives(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  retrieval::MinedNegatives n;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 'qid<TAB>pids'");
    }
    std::istringstream ids(line.substr(tab + 1));
    auto& list = n.lists[line.substr(0, tab)];
    std::string pid;
    while (ids >> pid) list.push_back(pid);
  }
  return n;
}

}  // namespace lead::pipeline
