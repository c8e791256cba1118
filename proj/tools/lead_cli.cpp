// Command-line front end. Talks to the library only through lead.h.

#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lead/lead.h"

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(lead_status s, const char* what) {
  if (s != LEAD_OK) {
    throw Failure(std::string(what) + ": " + lead_status_name(s) + ": " + lead_last_error());
  }
}

struct ConfigDeleter {
  void operator()(lead_config* c) const { lead_config_free(c); }
};
struct CorpusDeleter {
  void operator()(lead_corpus* c) const { lead_corpus_free(c); }
};
using ConfigPtr = std::unique_ptr<lead_config, ConfigDeleter>;
using CorpusPtr = std::unique_ptr<lead_corpus, CorpusDeleter>;

std::string take(char* s) {
  std::string out = s ? s : "";
  lead_string_free(s);
  return out;
}

// Options shared by every subcommand: preset, config file and one flag per
// configuration key.
struct Common {
  std::string preset = "desk";
  std::string config_file;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--preset", common.preset, "configuration preset (desk or paper)");
  cmd->add_option("--config", common.config_file, "flat 'key = value' configuration file");
  for (std::size_t i = 0; i < lead_config_key_count(); ++i) {
    const std::string key = lead_config_key(i);
    cmd->add_option_function<std::string>(
        "--" + key, [&common, key](const std::string& v) { common.overrides[key] = v; },
        lead_config_key_help(i));
  }
}

// Precedence: preset < config file < LEAD_* environment < flags.
ConfigPtr build_config(const Common& common) {
  lead_config* raw = nullptr;
  check(lead_config_create(common.preset.c_str(), &raw), "preset");
  ConfigPtr cfg(raw);
  if (!common.config_file.empty()) check(lead_config_load_file(cfg.get(), common.config_file.c_str()), "config file");
  check(lead_config_apply_env(cfg.get(), "LEAD_"), "environment");
  for (const auto& [k, v] : common.overrides) check(lead_config_set(cfg.get(), k.c_str(), v.c_str()), ("--" + k).c_str());
  check(lead_config_validate(cfg.get()), "configuration");
  return cfg;
}

CorpusPtr open_corpus(const lead_config* cfg) {
  lead_corpus* raw = nullptr;
  char* dir = nullptr;
  check(lead_config_get(cfg, "corpus_dir", &dir), "corpus_dir");
  const std::string corpus_dir = take(dir);
  if (corpus_dir.empty()) {
    check(lead_corpus_generate(cfg, &raw), "generate corpus");
  } else {
    check(lead_corpus_load(corpus_dir.c_str(), &raw), "load corpus");
  }
  return CorpusPtr(raw);
}

std::string get(const lead_config* cfg, const char* key) {
  char* v = nullptr;
  check(lead_config_get(cfg, key, &v), key);
  return take(v);
}

const char* opt_cstr(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise distillation for dense retrieval at desk scale"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lead_version()));

  Common common;
  std::string out_dir, model_path, out_path, first_stage, run_path, warmup_dir, prefix;
  std::vector<std::string> inputs;

  auto* gen = app.add_subcommand("generate-corpus", "write the synthetic corpus to a directory");
  add_common(gen, common);
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* warm = app.add_subcommand("warmup", "train retriever, teacher(s) and student; mine negatives");
  add_common(warm, common);

  auto* mine = app.add_subcommand("mine", "mine hard negatives with a DE checkpoint");
  add_common(mine, common);
  mine->add_option("--model", model_path, "DE checkpoint")->required();
  mine->add_option("--out", out_path, "negatives file")->required();

  auto* dist = app.add_subcommand("distill", "run one distillation method from warmup checkpoints");
  add_common(dist, common);
  dist->add_option("--warmup-dir", warmup_dir, "warmup directory (default <output_dir>/warmup_seed<seed>)");

  auto* chain = app.add_subcommand("chain", "continual distillation through the configured teachers");
  add_common(chain, common);
  chain->add_option("--warmup-dir", warmup_dir, "warmup directory");

  auto* sweep = app.add_subcommand("sweep-k", "LEAD for every K from 1 to the student depth");
  add_common(sweep, common);
  sweep->add_option("--warmup-dir", warmup_dir, "warmup directory");

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on the held-out queries");
  add_common(eval, common);
  eval->add_option("--model", model_path, "checkpoint to evaluate")->required();
  eval->add_option("--first-stage", first_stage, "DE checkpoint supplying CB/CE candidates");
  eval->add_option("--run", run_path, "write the TREC run here");

  auto* report = app.add_subcommand("report", "merge report TSV files into <prefix>.tsv and <prefix>.md");
  report->add_option("--out", prefix, "output prefix")->required();
  report->add_option("inputs", inputs, "report TSV files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      std::vector<const char*> paths;
      for (const auto& p : inputs) paths.push_back(p.c_str());
      check(lead_report(paths.data(), paths.size(), prefix.c_str()), "report");
      std::printf("%s.tsv\n%s.md\n", prefix.c_str(), prefix.c_str());
      return 0;
    }

    ConfigPtr cfg = build_config(common);
    CorpusPtr corpus = open_corpus(cfg.get());
    const char* wdir = opt_cstr(warmup_dir);

    if (gen->parsed()) {
      check(lead_corpus_save(corpus.get(), out_dir.c_str()), "save corpus");
      std::size_t p = 0, tq = 0, eq = 0, qr = 0;
      check(lead_corpus_counts(corpus.get(), &p, &tq, &eq, &qr), "counts");
      std::printf("passages %zu\ntrain_queries %zu\neval_queries %zu\nqrels %zu\n", p, tq, eq, qr);
    } else if (warm->parsed()) {
      check(lead_run_warmup(cfg.get(), corpus.get()), "warmup");
      std::printf("%s/warmup_seed%s\n", get(cfg.get(), "output_dir").c_str(), get(cfg.get(), "seed").c_str());
    } else if (mine->parsed()) {
      check(lead_run_mine(cfg.get(), corpus.get(), model_path.c_str(), out_path.c_str()), "mine");
      std::printf("%s\n", out_path.c_str());
    } else if (dist->parsed()) {
      char* path = nullptr;
      check(lead_run_distill(cfg.get(), corpus.get(), wdir, &path), "distill");
      std::printf("%s\n", take(path).c_str());
    } else if (chain->parsed()) {
      char* path = nullptr;
      check(lead_run_chain(cfg.get(), corpus.get(), wdir, &path), "chain");
      std::printf("%s\n", take(path).c_str());
    } else if (sweep->parsed()) {
      char* path = nullptr;
      check(lead_run_sweep_k(cfg.get(), corpus.get(), wdir, &path), "sweep-k");
      std::printf("%s\n", take(path).c_str());
    } else if (eval->parsed()) {
      char* metrics = nullptr;
      check(lead_evaluate(cfg.get(), corpus.get(), model_path.c_str(), opt_cstr(first_stage),
                          opt_cstr(run_path), &metrics),
            "evaluate");
      std::fputs(take(metrics).c_str(), stdout);
    }
  } catch (const Failure& e) {
    std::fprintf(stderr, "lead: %s\n", e.what());
    return 1;
  }
  return 0;
}
