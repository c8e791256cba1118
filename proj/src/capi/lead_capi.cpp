#include "lead/lead.h"

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "lead/error.hpp"
#include "lead/model/checkpoint.hpp"
#include "lead/pipeline/config.hpp"
#include "lead/pipeline/experiment.hpp"
#include "lead/pipeline/report.hpp"
#include "lead/retrieval/trec.hpp"

struct lead_config {
  lead::pipeline::ExperimentConfig cfg;
};

struct lead_corpus {
  lead::synth::SynthCorpus corpus;
};

struct lead_model {
  lead::model::RetrievalModel model;
};

namespace {

namespace fs = std::filesystem;
using lead::pipeline::ExperimentConfig;

thread_local std::string g_error;

lead_status to_status(lead::ErrorCode c) {
  switch (c) {
    case lead::ErrorCode::InvalidInput: return LEAD_ERR_INVALID_INPUT;
    case lead::ErrorCode::InvalidParameter: return LEAD_ERR_INVALID_PARAMETER;
    case lead::ErrorCode::Domain: return LEAD_ERR_DOMAIN;
    case lead::ErrorCode::Io: return LEAD_ERR_IO;
    case lead::ErrorCode::Format: return LEAD_ERR_FORMAT;
    case lead::ErrorCode::Divergence: return LEAD_ERR_DIVERGENCE;
    default: return LEAD_ERR_INTERNAL;
  }
}

template <typename F>
lead_status guard(F&& f) {
  g_error.clear();
  try {
    f();
    return LEAD_OK;
  } catch (const lead::Error& e) {
    g_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
  } catch (const std::exception& e) {
    g_error = e.what();
  } catch (...) {
    g_error = "unknown error";
  }
  return LEAD_ERR_INTERNAL;
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw lead::InvalidInput(std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fs::path ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw lead::IoError("cannot create directory " + p.string() + ": " + ec.message());
  return p;
}

fs::path warmup_path(const ExperimentConfig& cfg, const char* warmup_dir) {
  if (warmup_dir != nullptr) return warmup_dir;
  return fs::path(cfg.output_dir) / ("warmup_seed" + std::to_string(cfg.seed));
}

struct WarmupFiles {
  lead::model::RetrievalModel student;
  lead::retrieval::MinedNegatives negatives;
};

WarmupFiles load_warmup(const fs::path& dir) {
  return {lead::model::load_checkpoint((dir / "student.ckpt").string()),
          lead::pipeline::read_negatives((dir / "negatives.tsv").string())};
}

lead::model::RetrievalModel load_teacher(const fs::path& dir, lead::model::Variant v) {
  const fs::path p = dir / (std::string("teacher_") + lead::model::variant_name(v) + ".ckpt");
  if (!fs::exists(p)) {
    throw lead::IoError("missing warmup teacher " + p.string() +
                        " (train it with teacher_variant or warmup_extra_teachers)");
  }
  return lead::model::load_checkpoint(p.string());
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

std::string emit(const std::vector<lead::pipeline::ReportRow>& rows, const fs::path& prefix) {
  lead::pipeline::emit_report(rows, prefix.string());
  return prefix.string() + ".tsv";
}

}  // namespace

extern "C" {

const char* lead_version(void) { return "0.1.0"; }

const char* lead_last_error(void) { return g_error.c_str(); }

const char* lead_status_name(lead_status status) {
  switch (status) {
    case LEAD_OK: return "ok";
    case LEAD_ERR_INVALID_INPUT: return "invalid input";
    case LEAD_ERR_INVALID_PARAMETER: return "invalid parameter";
    case LEAD_ERR_DOMAIN: return "domain error";
    case LEAD_ERR_IO: return "i/o error";
    case LEAD_ERR_FORMAT: return "format error";
    case LEAD_ERR_DIVERGENCE: return "divergence";
    case LEAD_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void lead_string_free(char* s) { std::free(s); }

lead_status lead_config_create(const char* preset, lead_config** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    auto cfg = lead::pipeline::preset(preset ? preset : "desk");
    *out = new lead_config{std::move(cfg)};
  });
}

void lead_config_free(lead_config* cfg) { delete cfg; }

lead_status lead_config_set(lead_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    lead::pipeline::set_value(cfg->cfg, key, value);
  });
}

lead_status lead_config_get(const lead_config* cfg, const char* key, char** value) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    *value = dup_string(lead::pipeline::get_value(cfg->cfg, key));
  });
}

lead_status lead_config_load_file(lead_config* cfg, const char* path) {
  return guard([&] {
    require(cfg, "cfg");
    require(path, "path");
    lead::pipeline::load_config_file(cfg->cfg, path);
  });
}

lead_status lead_config_save_file(const lead_config* cfg, const char* path) {
  return guard([&] {
    require(cfg, "cfg");
    require(path, "path");
    lead::pipeline::write_config_file(cfg->cfg, path);
  });
}

lead_status lead_config_apply_env(lead_config* cfg, const char* prefix) {
  return guard([&] {
    require(cfg, "cfg");
    lead::pipeline::apply_env(cfg->cfg, prefix ? prefix : "LEAD_");
  });
}

lead_status lead_config_validate(const lead_config* cfg) {
  return guard([&] {
    require(cfg, "cfg");
    cfg->cfg.validate();
  });
}

size_t lead_config_key_count(void) { return lead::pipeline::config_keys().size(); }

const char* lead_config_key(size_t index) {
  static const std::vector<std::string> keys = lead::pipeline::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

const char* lead_config_key_help(size_t index) {
  static const std::vector<std::string> help = [] {
    std::vector<std::string> h;
    for (const auto& k : lead::pipeline::config_keys()) h.push_back(lead::pipeline::config_help(k));
    return h;
  }();
  return index < help.size() ? help[index].c_str() : nullptr;
}

lead_status lead_corpus_generate(const lead_config* cfg, lead_corpus** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = nullptr;
    *out = new lead_corpus{lead::synth::generate(cfg->cfg.corpus)};
  });
}

lead_status lead_corpus_load(const char* dir, lead_corpus** out) {
  return guard([&] {
    require(dir, "dir");
    require(out, "out");
    *out = nullptr;
    *out = new lead_corpus{lead::synth::load_corpus(dir)};
  });
}

lead_status lead_corpus_save(const lead_corpus* corpus, const char* dir) {
  return guard([&] {
    require(corpus, "corpus");
    require(dir, "dir");
    lead::synth::save_corpus(corpus->corpus, dir);
  });
}

void lead_corpus_free(lead_corpus* corpus) { delete corpus; }

lead_status lead_corpus_counts(const lead_corpus* corpus, size_t* passages, size_t* train_queries,
                               size_t* eval_queries, size_t* qrels) {
  return guard([&] {
    require(corpus, "corpus");
    if (passages) *passages = corpus->corpus.passages.size();
    if (train_queries) *train_queries = corpus->corpus.train_queries.size();
    if (eval_queries) *eval_queries = corpus->corpus.eval_queries.size();
    if (qrels) *qrels = corpus->corpus.qrels.size();
  });
}

lead_status lead_model_load(const char* path, lead_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new lead_model{lead::model::load_checkpoint(std::string(path))};
  });
}

lead_status lead_model_save(const lead_model* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    lead::model::save_checkpoint(model->model, std::string(path));
  });
}

void lead_model_free(lead_model* model) { delete model; }

lead_status lead_model_info(const lead_model* model, const char** variant, size_t* num_layers,
                            size_t* hidden_dim) {
  return guard([&] {
    require(model, "model");
    if (variant) *variant = lead::model::variant_name(model->model.variant());
    if (num_layers) *num_layers = model->model.num_layers();
    if (hidden_dim) *hidden_dim = model->model.config().encoder.hidden_dim;
  });
}

lead_status lead_model_layer_score(const lead_model* model, int layer, const int32_t* query,
                                   size_t query_len, const int32_t* passage, size_t passage_len,
                                   double* score) {
  return guard([&] {
    require(model, "model");
    require(query, "query");
    require(passage, "passage");
    require(score, "score");
    lead::num::NoGradGuard no_grad;
    lead::model::TokenSequence q{{query, query + query_len}};
    lead::model::TokenSequence p{{passage, passage + passage_len}};
    *score = model->model.layer_score(layer, q, p).item();
  });
}

lead_status lead_run_warmup(const lead_config* cfg, const lead_corpus* corpus) {
  return guard([&] {
    require(cfg, "cfg");
    require(corpus, "corpus");
    auto w = lead::pipeline::run_warmup(cfg->cfg, corpus->corpus);
    const fs::path dir = ensure_dir(warmup_path(cfg->cfg, nullptr));
    lead::model::save_checkpoint(w.retriever, (dir / "retriever.ckpt").string());
    lead::model::save_checkpoint(w.student, (dir / "student.ckpt").string());
    for (const auto& [v, t] : w.teachers) {
      lead::model::save_checkpoint(t, (dir / (std::string("teacher_") + lead::model::variant_name(v) + ".ckpt")).string());
    }
    lead::pipeline::write_negatives(w.negatives, (dir / "negatives.tsv").string());
    std::ofstream warn(dir / "warnings.txt");
    for (const auto& m : w.negatives.warnings) warn << m << '\n';
  });
}

lead_status lead_run_mine(const lead_config* cfg, const lead_corpus* corpus, const char* model_path,
                          const char* out_path) {
  return guard([&] {
    require(cfg, "cfg");
    require(corpus, "corpus");
    require(model_path, "model_path");
    require(out_path, "out_path");
    auto m = lead::model::load_checkpoint(std::string(model_path));
    auto mined = lead::retrieval::mine_hard_negatives(m, corpus->corpus.passages, corpus->corpus.train_queries,
                                                      corpus->corpus.qrels, cfg->cfg.mine_top_n);
    lead::pipeline::write_negatives(mined, out_path);
    if (!mined.warnings.empty()) {
      std::ofstream warn(std::string(out_path) + ".warnings.txt");
      for (const auto& w : mined.warnings) warn << w << '\n';
    }
  });
}

lead_status lead_run_distill(const lead_config* cfg, const lead_corpus* corpus, const char* warmup_dir,
                             char** report_tsv_path) {
  return guard([&] {
    require(cfg, "cfg");
    require(corpus, "corpus");
    const auto& c = cfg->cfg;
    c.validate();
    const fs::path wdir = warmup_path(c, warmup_dir);
    auto w = load_warmup(wdir);
    auto teacher = load_teacher(wdir, c.teacher_variant);
    lead::pipeline::Evaluator ev(corpus->corpus, w.student, c.rerank_depth, c.eval_ks);
    auto r = lead::pipeline::run_distill(c, corpus->corpus, teacher, w.student, w.negatives, ev);
    const std::string tag = file_safe(c.method_label()) + "_seed" + std::to_string(c.seed);
    const fs::path dir = ensure_dir(fs::path(c.output_dir) / "distill" / tag);
    lead::model::save_checkpoint(r.student, (dir / "student.ckpt").string());
    if (r.teacher) lead::model::save_checkpoint(*r.teacher, (dir / "teacher.ckpt").string());
    const std::string path = emit(r.rows, fs::path(c.output_dir) / ("report_" + tag));
    if (report_tsv_path) *report_tsv_path = dup_string(path);
  });
}

lead_status lead_run_chain(const lead_config* cfg, const lead_corpus* corpus, const char* warmup_dir,
                           char** report_tsv_path) {
  return guard([&] {
    require(cfg, "cfg");
    require(corpus, "corpus");
    const auto& c = cfg->cfg;
    c.validate();
    const fs::path wdir = warmup_path(c, warmup_dir);
    auto w = load_warmup(wdir);
    std::vector<lead::model::RetrievalModel> owned;
    owned.reserve(c.chain.size());
    for (auto v : c.chain) owned.push_back(load_teacher(wdir, v));
    std::vector<const lead::model::RetrievalModel*> teachers;
    for (const auto& t : owned) teachers.push_back(&t);
    lead::pipeline::Evaluator ev(corpus->corpus, w.student, c.rerank_depth, c.eval_ks);
    auto r = lead::pipeline::run_chain(c, corpus->corpus, teachers, w.student, w.negatives, ev);
    const std::string tag = "chain_seed" + std::to_string(c.seed);
    const fs::path dir = ensure_dir(fs::path(c.output_dir) / "chain" / ("seed" + std::to_string(c.seed)));
    lead::model::save_checkpoint(r.student, (dir / "student.ckpt").string());
    const std::string path = emit(r.rows, fs::path(c.output_dir) / ("report_" + tag));
    if (report_tsv_path) *report_tsv_path = dup_string(path);
  });
}

lead_status lead_run_sweep_k(const lead_config* cfg, const lead_corpus* corpus, const char* warmup_dir,
                             char** report_tsv_path) {
  return guard([&] {
    require(cfg, "cfg");
    require(corpus, "corpus");
    const auto& c = cfg->cfg;
    const fs::path wdir = warmup_path(c, warmup_dir);
    auto w = load_warmup(wdir);
    auto teacher = load_teacher(wdir, c.teacher_variant);
    lead::pipeline::Evaluator ev(corpus->corpus, w.student, c.rerank_depth, c.eval_ks);
    auto rows = lead::pipeline::sweep_k(c, corpus->corpus, teacher, w.student, w.negatives, ev);
    ensure_dir(c.output_dir);
    const std::string path =
        emit(rows, fs::path(c.output_dir) / ("report_sweep_k_seed" + std::to_string(c.seed)));
    if (report_tsv_path) *report_tsv_path = dup_string(path);
  });
}

lead_status lead_evaluate(const lead_config* cfg, const lead_corpus* corpus, const char* model_path,
                          const char* first_stage_path, const char* run_path, char** metrics) {
  return guard([&] {
    require(cfg, "cfg");
    require(corpus, "corpus");
    require(model_path, "model_path");
    auto m = lead::model::load_checkpoint(std::string(model_path));
    std::optional<lead::model::RetrievalModel> first;
    if (first_stage_path != nullptr) {
      first = lead::model::load_checkpoint(std::string(first_stage_path));
    } else if (m.variant() == lead::model::Variant::DualEncoder) {
      first = m.clone();
    } else {
      throw lead::InvalidInput("CB and CE models need a first-stage DE checkpoint");
    }
    lead::pipeline::Evaluator ev(corpus->corpus, *first, cfg->cfg.rerank_depth, cfg->cfg.eval_ks);
    auto run = ev.run(m);
    if (run_path != nullptr) lead::retrieval::write_run(run, std::string(run_path), "lead");
    std::ostringstream s;
    s.precision(17);
    for (const auto& [name, value] : ev.metrics(run)) s << name << '\t' << value << '\n';
    if (metrics) *metrics = dup_string(s.str());
  });
}

lead_status lead_report(const char* const* tsv_paths, size_t count, const char* prefix) {
  return guard([&] {
    require(prefix, "prefix");
    if (count > 0) require(tsv_paths, "tsv_paths");
    std::vector<lead::pipeline::ReportRow> rows;
    for (size_t i = 0; i < count; ++i) {
      require(tsv_paths[i], "tsv path");
      auto part = lead::pipeline::read_tsv(std::string(tsv_paths[i]));
      rows.insert(rows.end(), part.begin(), part.end());
    }
    lead::pipeline::emit_report(rows, prefix);
  });
}

}  // extern "C"
