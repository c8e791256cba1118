#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lead/error.hpp"
#include "lead/model/checkpoint.hpp"
#include "lead/pipeline/config.hpp"
#include "lead/pipeline/experiment.hpp"
#include "lead/pipeline/report.hpp"

using namespace lead;
using namespace lead::pipeline;

namespace {

ExperimentConfig smoke_config() {
  ExperimentConfig c;
  c.corpus.num_topics = 4;
  c.corpus.passages_per_topic = 12;
  c.corpus.queries_per_topic = 4;
  c.corpus.eval_queries = 6;
  c.corpus.vocab_size = 64;
  c.corpus.query_len = 4;
  c.corpus.passage_len = 8;
  c.teacher_layers = 3;
  c.student_layers = 2;
  c.hidden_dim = 8;
  c.ff_dim = 16;
  c.max_positions = 16;
  c.warmup_steps = 8;
  c.optim.total_steps = 6;
  c.batch_size = 4;
  c.negative_size = 2;
  c.mine_top_n = 4;
  c.rerank_depth = 10;
  c.eval_ks = {5, 10};
  c.output_dir = (std::filesystem::temp_directory_path() / "lead_pipeline_test").string();
  return c;
}

// Warmup shared across test cases; it is deterministic in the config.
struct Shared {
  ExperimentConfig cfg = smoke_config();
  synth::SynthCorpus corpus = load_or_generate(cfg);
  WarmupResult warm = [this] {
    auto c = cfg;
    c.warmup_extra_teachers = {model::Variant::DualEncoder, model::Variant::CrossEncoder};
    return run_warmup(c, corpus);
  }();
  Evaluator ev{corpus, warm.student, cfg.rerank_depth, cfg.eval_ks};
  const model::RetrievalModel& teacher(model::Variant v = model::Variant::LateInteraction) const {
    return warm.teachers.at(v);
  }
};

Shared& shared() {
  static Shared s;
  return s;
}

std::string tsv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  write_tsv(rows, out);
  return out.str();
}

std::vector<double> snapshot(const model::RetrievalModel& m) {
  std::vector<double> out;
  for (auto& t : m.parameters()) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

}  // namespace

TEST_CASE("config defaults and presets validate") {
  CHECK_NOTHROW(desk_preset().validate());
  CHECK_NOTHROW(paper_preset().validate());
  CHECK(paper_preset().teacher_layers == 12);
  CHECK(paper_preset().negative_size == 16);
  CHECK_THROWS_AS(preset("huge"), InvalidParameter);
  ExperimentConfig c;
  CHECK(c.distill.tau == 1.0);
  CHECK(c.distill.K == c.student_layers);
  c.distill.K = 3;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c.student_projection_dim = 32;
  CHECK_NOTHROW(c.validate());  // the projection is an extra selectable layer
  c = ExperimentConfig{};
  c.teacher_layers = 1;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c = ExperimentConfig{};
  c.distill.strategy = distill::SelectionStrategy::Skip;
  c.distill.skip_stride = 4;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c = ExperimentConfig{};
  c.max_positions = 20;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
}

TEST_CASE("every config key round trips through get and set") {
  ExperimentConfig a = smoke_config();
  a.method = distill::Method::Response;
  a.distill.tau = 0.37;
  a.optim.learning_rate = 1.25e-4;
  a.eval_ks = {1, 5, 100};
  a.chain = {model::Variant::CrossEncoder, model::Variant::DualEncoder};
  a.warmup_extra_teachers = {model::Variant::CrossEncoder};
  a.label = "custom label";
  a.distill.tau_placement = distill::TauPlacement::Literal;
  ExperimentConfig b;
  for (const auto& key : config_keys()) {
    CHECK_FALSE(config_help(key).empty());
    set_value(b, key, get_value(a, key));
  }
  CHECK(to_map(a) == to_map(b));
  CHECK_THROWS_AS(set_value(b, "no_such_key", "1"), InvalidParameter);
  CHECK_THROWS_AS(set_value(b, "steps", "many"), InvalidParameter);
  CHECK_THROWS_AS(set_value(b, "steps", "-3"), InvalidParameter);
  CHECK_THROWS_AS(set_value(b, "joint_training", "maybe"), InvalidParameter);
  CHECK_THROWS_AS(set_value(b, "teacher_variant", "XL"), InvalidParameter);
  CHECK_THROWS_AS(get_value(b, "nope"), InvalidParameter);
}

TEST_CASE("config files and environment overrides") {
  auto dir = std::filesystem::temp_directory_path() / "lead_cfg_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "exp.cfg").string();
  ExperimentConfig a = smoke_config();
  a.seed = 77;
  write_config_file(a, path);
  ExperimentConfig b;
  load_config_file(b, path);
  CHECK(to_map(a) == to_map(b));

  {
    std::ofstream f(path);
    f << "# comment line\nsteps = 12   # trailing comment\n\npreset = paper\n";
  }
  ExperimentConfig c;
  load_config_file(c, path);
  CHECK(c.teacher_layers == 12);  // preset applied first
  CHECK(c.optim.total_steps == 12);
  {
    std::ofstream f(path);
    f << "steps 12\n";
  }
  CHECK_THROWS_AS(load_config_file(c, path), FormatError);
  CHECK_THROWS_AS(load_config_file(c, (dir / "missing.cfg").string()), IoError);

  ::setenv("LEADTEST_STEPS", "33", 1);
  ::setenv("LEADTEST_METHOD", "FD", 1);
  ExperimentConfig d;
  auto keys = apply_env(d, "LEADTEST_");
  CHECK(d.optim.total_steps == 33);
  CHECK(d.method == distill::Method::Feature);
  CHECK(keys.size() == 2);
  ::unsetenv("LEADTEST_STEPS");
  ::unsetenv("LEADTEST_METHOD");
  std::filesystem::remove_all(dir);
}

TEST_CASE("report TSV round trip and aggregation") {
  std::vector<ReportRow> rows = {
      {"4CB -> 2DE", "LEAD", "MRR@10", 1, 0.5},
      {"4CB -> 2DE", "LEAD", "MRR@10", 2, 0.1 + 0.2},
      {"4CB -> 2DE", "LEAD", "MRR@10", 3, 1.0 / 3.0},
      {"4CB -> 2DE", "RD", "MRR@10", 1, 0.0},
      {"4DE -> 2DE", "LEAD", "nDCG@10", 1, 1.0},
  };
  std::istringstream in(tsv(rows));
  CHECK(read_tsv(in) == rows);

  auto agg = aggregate(rows);
  REQUIRE(agg.size() == 3);
  CHECK(agg[0].method == "LEAD");
  CHECK(agg[0].count == 3);
  const double mean = (0.5 + 0.3 + 1.0 / 3.0) / 3.0;
  CHECK(agg[0].mean == doctest::Approx(mean).epsilon(1e-12));
  const double var = (std::pow(0.5 - mean, 2) + std::pow(0.3 - mean, 2) + std::pow(1.0 / 3.0 - mean, 2)) / 2.0;
  CHECK(agg[0].stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  CHECK(std::isnan(agg[1].stddev));
  CHECK(find_aggregate(rows, "4CB -> 2DE", "RD", "MRR@10").mean == 0.0);
  CHECK_THROWS_AS(find_aggregate(rows, "x", "RD", "MRR@10"), InvalidInput);

  std::ostringstream md;
  write_markdown(rows, md);
  CHECK(md.str().find("## 4CB -> 2DE") != std::string::npos);
  CHECK(md.str().find("±") != std::string::npos);
  CHECK(md.str().find("(n=3)") != std::string::npos);

  std::istringstream bad("setting\tmethod\tmetric\tseed\tvalue\ns\tm\tx\t1\n");
  CHECK_THROWS_AS(read_tsv(bad), FormatError);
}

TEST_CASE("empty reports are header-only") {
  auto prefix = (std::filesystem::temp_directory_path() / "lead_empty_report").string();
  emit_report({}, prefix);
  std::ifstream t(prefix + ".tsv");
  std::string all((std::istreambuf_iterator<char>(t)), {});
  CHECK(all == "setting\tmethod\tmetric\tseed\tvalue\n");
  std::ifstream m(prefix + ".md");
  std::string md((std::istreambuf_iterator<char>(m)), {});
  CHECK(md == "# Results\n");
  CHECK(read_tsv(prefix + ".tsv").empty());
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, "batches", 0) == derive_seed(1, "batches", 0));
  CHECK(derive_seed(1, "batches", 0) != derive_seed(1, "batches", 1));
  CHECK(derive_seed(1, "batches", 0) != derive_seed(2, "batches", 0));
  CHECK(derive_seed(1, "batches", 0) != derive_seed(1, "distill", 0));
}

TEST_CASE("warmup stages") {
  auto& s = shared();
  for (auto& [qid, list] : s.warm.negatives.lists) {
    CHECK_FALSE(list.empty());
    for (auto& pid : list) CHECK(s.corpus.qrels.grade(qid, pid) == 0);
  }
  CHECK(s.warm.teachers.size() == 3);
  CHECK(s.warm.retriever.num_layers() == s.cfg.teacher_layers);
  CHECK(s.warm.student.num_layers() == s.cfg.student_layers);
  CHECK(setting_label(s.teacher(), s.warm.student) == "3CB -> 2DE");

  // Stage 1 beats an untrained DE of the same shape.
  auto mc = s.cfg.teacher_model(model::Variant::DualEncoder);
  mc.seed = derive_seed(s.cfg.seed, "stage1-model");
  model::RetrievalModel untrained(mc);
  CHECK(s.ev.mrr(s.warm.retriever) >= s.ev.mrr(untrained));

  // Checkpoints reload to identical evaluation.
  std::stringstream buf;
  model::save_checkpoint(s.teacher(), buf);
  auto back = model::load_checkpoint(buf);
  CHECK(s.ev.metrics(back) == s.ev.metrics(s.teacher()));

  auto path = (std::filesystem::temp_directory_path() / "lead_negatives.tsv").string();
  write_negatives(s.warm.negatives, path);
  CHECK(read_negatives(path).lists == s.warm.negatives.lists);
}

TEST_CASE("evaluation metrics are named and bounded") {
  auto& s = shared();
  for (auto v : {model::Variant::DualEncoder, model::Variant::LateInteraction, model::Variant::CrossEncoder}) {
    auto m = s.ev.metrics(s.teacher(v));
    REQUIRE(m.size() == 8);
    CHECK(m[0].first == "MRR@5");
    CHECK(m[1].first == "MAP@5");
    CHECK(m[2].first == "R@5");
    CHECK(m[3].first == "nDCG@5");
    CHECK(m[4].first == "MRR@10");
    for (auto& [name, value] : m) {
      CHECK(value >= 0.0);
      CHECK(value <= 1.0);
    }
  }
  auto run = s.ev.run(s.teacher(model::Variant::CrossEncoder));
  for (auto& [qid, recs] : run) CHECK(recs.size() <= s.cfg.rerank_depth);
}

TEST_CASE("method flag matrix runs") {
  auto& s = shared();
  for (auto method : {distill::Method::StudentOnly, distill::Method::Response, distill::Method::Feature,
                      distill::Method::Layerwise}) {
    for (bool joint : {true, false}) {
      for (bool rw : {true, false}) {
        for (auto v : {model::Variant::DualEncoder, model::Variant::LateInteraction, model::Variant::CrossEncoder}) {
          auto cfg = s.cfg;
          cfg.method = method;
          cfg.distill.joint_training = joint;
          cfg.distill.layer_reweighting = rw;
          DistillResult r = run_distill(cfg, s.corpus, s.teacher(v), s.warm.student, s.warm.negatives, s.ev);
          CHECK(r.losses.size() == cfg.optim.total_steps);
          const std::size_t per_model = 8;
          CHECK(r.rows.size() == (method == distill::Method::StudentOnly ? per_model : 3 * per_model));
          for (auto& row : r.rows) CHECK(row.method.rfind(distill::method_name(method), 0) == 0);
        }
      }
    }
  }
}

TEST_CASE("teacher freezing follows joint training") {
  auto& s = shared();
  auto cfg = s.cfg;
  cfg.distill.joint_training = false;
  auto frozen = run_distill(cfg, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
  CHECK(snapshot(*frozen.teacher) == snapshot(s.teacher()));
  cfg.distill.joint_training = true;
  auto joint = run_distill(cfg, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
  CHECK(snapshot(*joint.teacher) != snapshot(s.teacher()));
  // Inputs are never modified.
  CHECK(s.teacher().trainable());
}

TEST_CASE("zeroed distillation terms reproduce student_only exactly") {
  auto& s = shared();
  auto base = s.cfg;
  base.method = distill::Method::StudentOnly;
  auto ref = run_distill(base, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
  for (auto method : {distill::Method::Layerwise, distill::Method::Response, distill::Method::Feature}) {
    auto cfg = s.cfg;
    cfg.method = method;
    cfg.label = "student_only";
    cfg.distill.layer_loss_scale = 0.0;
    cfg.distill.response_loss_scale = 0.0;
    cfg.distill.feature_loss_scale = 0.0;
    auto r = run_distill(cfg, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
    CHECK(snapshot(r.student) == snapshot(ref.student));
    for (std::size_t i = 0; i < ref.losses.size(); ++i) CHECK(r.losses[i].l_stu == ref.losses[i].l_stu);
    std::vector<ReportRow> student_rows(r.rows.begin(), r.rows.begin() + static_cast<long>(ref.rows.size()));
    CHECK(student_rows == ref.rows);
  }
}

TEST_CASE("runs are bit-reproducible") {
  auto& s = shared();
  auto cfg = s.cfg;
  auto a = run_distill(cfg, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
  auto b = run_distill(cfg, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
  CHECK(tsv(a.rows) == tsv(b.rows));
  auto w = run_warmup(s.cfg, s.corpus);
  CHECK(snapshot(w.student) == snapshot(s.warm.student));
}

TEST_CASE("chain driver") {
  auto& s = shared();
  auto cfg = s.cfg;
  auto single = run_chain(cfg, s.corpus, {&s.teacher()}, s.warm.student, s.warm.negatives, s.ev);
  auto direct = run_distill(cfg, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
  CHECK(snapshot(single.student) == snapshot(direct.student));
  std::vector<ReportRow> direct_student(direct.rows.begin(), direct.rows.begin() + 8);
  REQUIRE(single.rows.size() == direct_student.size());
  for (std::size_t i = 0; i < single.rows.size(); ++i) {
    CHECK(single.rows[i].value == direct_student[i].value);
    CHECK(single.rows[i].method == "LEAD/S1");
  }

  auto three = run_chain(cfg, s.corpus,
                         {&s.teacher(model::Variant::DualEncoder), &s.teacher(model::Variant::LateInteraction),
                          &s.teacher(model::Variant::CrossEncoder)},
                         s.warm.student, s.warm.negatives, s.ev);
  std::set<std::string> labels, settings;
  for (auto& r : three.rows) {
    labels.insert(r.method);
    settings.insert(r.setting);
  }
  CHECK(labels == std::set<std::string>{"LEAD/S1", "LEAD/S2", "LEAD/S3"});
  CHECK(settings.count("3CE -> 2DE") == 1);
  CHECK_THROWS_AS(run_chain(cfg, s.corpus, {}, s.warm.student, s.warm.negatives, s.ev), InvalidInput);
}

TEST_CASE("K sweep") {
  auto& s = shared();
  auto rows = sweep_k(s.cfg, s.corpus, s.teacher(), s.warm.student, s.warm.negatives, s.ev);
  std::set<std::string> methods;
  for (auto& r : rows) methods.insert(r.method);
  CHECK(methods == std::set<std::string>{"LEAD K=1", "LEAD K=2"});
}

TEST_CASE("distillation rejects incompatible models") {
  auto& s = shared();
  auto cfg = s.cfg;
  CHECK_THROWS_AS(run_distill(cfg, s.corpus, s.warm.student, s.teacher(), s.warm.negatives, s.ev), InvalidInput);
  CHECK_THROWS_AS(run_distill(cfg, s.corpus, s.teacher(), s.teacher(model::Variant::CrossEncoder), s.warm.negatives, s.ev),
                  InvalidInput);
}
