#include "lead/pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "lead/error.hpp"

namespace lead::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw InvalidParameter("config key '" + key + "': '" + value + "' is not " + what);
}

template <typename T>
T parse_int(const std::string& key, const std::string& value) {
  T v{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) bad_value(key, value, "a non-negative integer");
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) bad_value(key, value, "a number");
  return v;
}

bool parse_flag(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string fmt_flag(bool v) { return v ? "true" : "false"; }

std::string fmt_variants(const std::vector<model::Variant>& vs) {
  std::string s;
  for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + std::string(model::variant_name(vs[i]));
  return s;
}

std::vector<model::Variant> parse_variants(const std::string& value) {
  std::vector<model::Variant> out;
  for (const auto& item : split_list(value)) out.push_back(model::parse_variant(item));
  return out;
}

const char* tau_placement_name(distill::TauPlacement t) {
  return t == distill::TauPlacement::Logits ? "logits" : "literal";
}

distill::TauPlacement parse_tau_placement(const std::string& key, const std::string& value) {
  if (value == "logits") return distill::TauPlacement::Logits;
  if (value == "literal") return distill::TauPlacement::Literal;
  bad_value(key, value, "'logits' or 'literal'");
}

struct Field {
  std::string key;
  std::string help;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

#define LEAD_SIZE_FIELD(name, member, help)                                                  \
  Field {                                                                                    \
    name, help, [](const ExperimentConfig& c) { return std::to_string(c.member); },          \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
          c.member = parse_int<std::size_t>(k, v);                                           \
        }                                                                                    \
  }
#define LEAD_REAL_FIELD(name, member, help)                                                  \
  Field {                                                                                    \
    name, help, [](const ExperimentConfig& c) { return fmt_real(c.member); },                \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
          c.member = parse_real(k, v);                                                       \
        }                                                                                    \
  }
#define LEAD_FLAG_FIELD(name, member, help)                                                  \
  Field {                                                                                    \
    name, help, [](const ExperimentConfig& c) { return fmt_flag(c.member); },                \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                \
          c.member = parse_flag(k, v);                                                       \
        }                                                                                    \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"corpus_dir", "corpus directory; empty generates the synthetic corpus",
       [](const ExperimentConfig& c) { return c.corpus_dir; },
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.corpus_dir = v; }},
      LEAD_SIZE_FIELD("num_topics", corpus.num_topics, "synthetic topics"),
      LEAD_SIZE_FIELD("passages_per_topic", corpus.passages_per_topic, "passages per topic"),
      LEAD_SIZE_FIELD("queries_per_topic", corpus.queries_per_topic, "training queries per topic"),
      LEAD_SIZE_FIELD("eval_queries", corpus.eval_queries, "held-out queries"),
      LEAD_SIZE_FIELD("vocab_size", corpus.vocab_size, "vocabulary size (corpus and models)"),
      LEAD_SIZE_FIELD("query_len", corpus.query_len, "query length in tokens"),
      LEAD_SIZE_FIELD("passage_len", corpus.passage_len, "passage length in tokens"),
      LEAD_REAL_FIELD("noise_rate", corpus.noise_rate, "off-topic token probability"),
      {"corpus_seed", "seed of the synthetic corpus",
       [](const ExperimentConfig& c) { return std::to_string(c.corpus.seed); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.corpus.seed = parse_int<std::uint64_t>(k, v);
       }},
      {"teacher_variant", "teacher model: DE, CB or CE",
       [](const ExperimentConfig& c) { return std::string(model::variant_name(c.teacher_variant)); },
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.teacher_variant = model::parse_variant(v);
       }},
      LEAD_SIZE_FIELD("teacher_layers", teacher_layers, "teacher encoder layers N"),
      LEAD_SIZE_FIELD("student_layers", student_layers, "student encoder layers M"),
      LEAD_SIZE_FIELD("hidden_dim", hidden_dim, "encoder width"),
      LEAD_SIZE_FIELD("ff_dim", ff_dim, "feed-forward width"),
      LEAD_SIZE_FIELD("max_positions", max_positions, "position table size"),
      LEAD_SIZE_FIELD("teacher_projection_dim", teacher_projection_dim,
                      "appended teacher projection width; 0 disables"),
      LEAD_SIZE_FIELD("student_projection_dim", student_projection_dim,
                      "appended student projection width; 0 disables"),
      LEAD_FLAG_FIELD("cb_cls_only_intermediate", cb_cls_only_intermediate,
                      "CB intermediate layers scored by CLS product"),
      {"method", "student_only, RD, FD or LEAD",
       [](const ExperimentConfig& c) { return std::string(distill::method_name(c.method)); },
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.method = distill::parse_method(v);
       }},
      LEAD_SIZE_FIELD("K", distill.K, "distilled layer pairs"),
      LEAD_REAL_FIELD("tau", distill.tau, "distillation temperature"),
      {"strategy", "layer selection: random, last or skip",
       [](const ExperimentConfig& c) { return std::string(distill::strategy_name(c.distill.strategy)); },
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.distill.strategy = distill::parse_strategy(v);
       }},
      LEAD_SIZE_FIELD("skip_stride", distill.skip_stride, "teacher stride of the skip strategy"),
      LEAD_FLAG_FIELD("joint_training", distill.joint_training, "train the teacher jointly"),
      LEAD_FLAG_FIELD("layer_reweighting", distill.layer_reweighting,
                      "weight layers by teacher informativeness"),
      LEAD_FLAG_FIELD("in_batch_negatives", distill.in_batch_negatives,
                      "extend pools with other examples' passages (DE/CB only)"),
      {"tau_placement", "logits (divide scores by tau) or literal (divide the KL by tau)",
       [](const ExperimentConfig& c) { return std::string(tau_placement_name(c.distill.tau_placement)); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.distill.tau_placement = parse_tau_placement(k, v);
       }},
      LEAD_REAL_FIELD("layer_loss_scale", distill.layer_loss_scale, "multiplier on L_lyr"),
      LEAD_REAL_FIELD("response_loss_scale", distill.response_loss_scale, "multiplier on L_rep"),
      LEAD_REAL_FIELD("feature_loss_scale", distill.feature_loss_scale, "multiplier on L_fd"),
      LEAD_REAL_FIELD("learning_rate", optim.learning_rate, "distillation learning rate"),
      LEAD_SIZE_FIELD("steps", optim.total_steps, "distillation steps"),
      LEAD_REAL_FIELD("warmup_proportion", optim.warmup_proportion, "linear warmup fraction"),
      LEAD_REAL_FIELD("weight_decay", optim.weight_decay, "AdamW weight decay"),
      LEAD_SIZE_FIELD("batch_size", batch_size, "queries per batch"),
      LEAD_SIZE_FIELD("negative_size", negative_size, "negatives per query"),
      LEAD_SIZE_FIELD("warmup_steps", warmup_steps, "steps of each warmup training stage"),
      LEAD_REAL_FIELD("warmup_learning_rate", warmup_learning_rate, "warmup learning rate"),
      LEAD_SIZE_FIELD("mine_top_n", mine_top_n, "hard negatives mined per query"),
      {"warmup_extra_teachers", "comma list of extra teacher variants trained in warmup",
       [](const ExperimentConfig& c) { return fmt_variants(c.warmup_extra_teachers); },
       [](ExperimentConfig& c, const std::string&, const std::string& v) {
         c.warmup_extra_teachers = parse_variants(v);
       }},
      {"eval_ks", "comma list of metric depths",
       [](const ExperimentConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.eval_ks.size(); ++i) s += (i ? "," : "") + std::to_string(c.eval_ks[i]);
         return s;
       },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.eval_ks.clear();
         for (const auto& item : split_list(v)) c.eval_ks.push_back(parse_int<std::size_t>(k, item));
       }},
      LEAD_SIZE_FIELD("rerank_depth", rerank_depth, "first-stage candidates reranked by CB/CE"),
      {"chain", "comma list of chain teacher variants",
       [](const ExperimentConfig& c) { return fmt_variants(c.chain); },
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.chain = parse_variants(v); }},
      {"seed", "experiment seed",
       [](const ExperimentConfig& c) { return std::to_string(c.seed); },
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_int<std::uint64_t>(k, v);
       }},
      {"label", "method column in reports; empty uses the method name",
       [](const ExperimentConfig& c) { return c.label; },
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.label = v; }},
      {"output_dir", "directory for checkpoints, runs and reports",
       [](const ExperimentConfig& c) { return c.output_dir; },
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
      LEAD_FLAG_FIELD("trace", trace, "write per-step loss traces"),
  };
  return table;
}

#undef LEAD_SIZE_FIELD
#undef LEAD_REAL_FIELD
#undef LEAD_FLAG_FIELD

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw InvalidParameter("unknown config key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  corpus.validate();
  auto fail = [](const std::string& msg) { throw InvalidParameter(msg); };
  if (student_layers == 0) fail("student_layers must be at least 1");
  if (teacher_layers < student_layers) fail("teacher_layers must be >= student_layers");
  if (hidden_dim == 0 || ff_dim == 0) fail("hidden_dim and ff_dim must be positive");
  if (method == distill::Method::Layerwise) {
    const std::size_t m = student_layers + (student_projection_dim > 0 ? 1 : 0);
    if (distill.K == 0 || distill.K > m) fail("K must lie in [1, student layers]");
    if (distill.strategy == distill::SelectionStrategy::Skip &&
        (distill.skip_stride == 0 || 1 + (distill.K - 1) * distill.skip_stride > teacher_layers)) {
      fail("skip strategy runs past the teacher's last layer");
    }
  }
  if (!(distill.tau > 0.0)) fail("tau must be positive");
  if (!(optim.learning_rate > 0.0) || !(warmup_learning_rate > 0.0)) fail("learning rates must be positive");
  if (optim.total_steps == 0) fail("steps must be at least 1");
  if (!(optim.warmup_proportion >= 0.0 && optim.warmup_proportion < 1.0)) {
    fail("warmup_proportion must lie in [0, 1)");
  }
  if (optim.weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (batch_size == 0) fail("batch_size must be at least 1");
  if (negative_size == 0) fail("negative_size must be at least 1");
  if (mine_top_n == 0) fail("mine_top_n must be at least 1");
  if (rerank_depth == 0) fail("rerank_depth must be at least 1");
  if (eval_ks.empty()) fail("eval_ks must name at least one depth");
  for (auto k : eval_ks) {
    if (k == 0) fail("eval_ks entries must be at least 1");
  }
  if (max_positions < corpus.query_len + corpus.passage_len + 2) {
    fail("max_positions must hold [CLS] query [SEP] passage");
  }
  if (chain.empty()) fail("chain must name at least one teacher");
}

std::string ExperimentConfig::method_label() const {
  return label.empty() ? std::string(distill::method_name(method)) : label;
}

model::ModelConfig ExperimentConfig::teacher_model(model::Variant v) const {
  model::ModelConfig m;
  m.variant = v;
  m.encoder = {corpus.vocab_size, hidden_dim, ff_dim, teacher_layers, max_positions};
  m.projection_dim = teacher_projection_dim;
  m.cb_cls_only_intermediate = cb_cls_only_intermediate;
  return m;
}

model::ModelConfig ExperimentConfig::student_model() const {
  model::ModelConfig m;
  m.variant = model::Variant::DualEncoder;
  m.encoder = {corpus.vocab_size, hidden_dim, ff_dim, student_layers, max_positions};
  m.projection_dim = student_projection_dim;
  return m;
}

ExperimentConfig desk_preset() { return ExperimentConfig{}; }

ExperimentConfig paper_preset() {
  ExperimentConfig c;
  c.teacher_layers = 12;
  c.student_layers = 6;
  c.distill.K = 6;
  c.distill.tau = 1.0;
  c.optim.learning_rate = 5e-5;
  c.optim.total_steps = 50000;
  c.optim.warmup_proportion = 0.1;
  c.batch_size = 80;
  c.negative_size = 16;
  c.warmup_learning_rate = 5e-5;
  c.warmup_steps = 50000;
  c.mine_top_n = 100;
  c.rerank_depth = 1000;
  c.eval_ks = {10, 1000};
  c.corpus.query_len = 32;
  c.corpus.passage_len = 144;
  c.max_positions = 180;
  return c;
}

ExperimentConfig preset(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper") return paper_preset();
  throw InvalidParameter("unknown preset '" + name + "' (expected desk or paper)");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::string config_help(const std::string& key) { return find_field(key).help; }

void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, key, trim(value));
}

std::string get_value(const ExperimentConfig& cfg, const std::string& key) {
  return find_field(key).get(cfg);
}

std::map<std::string, std::string> to_map(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.key] = f.get(cfg);
  return out;
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  for (const auto& [k, v] : entries) {
    if (k == "preset") cfg = preset(v);
  }
  for (const auto& [k, v] : entries) {
    if (k != "preset") set_value(cfg, k, v);
  }
}

void write_config_file(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& [k, v] : to_map(cfg)) out << k << " = " << v << '\n';
}

std::vector<std::string> apply_env(ExperimentConfig& cfg, const std::string& prefix) {
  std::vector<std::string> applied;
  for (const auto& f : fields()) {
    std::string name = prefix;
    for (char ch : f.key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = std::getenv(name.c_str())) {
      f.set(cfg, f.key, trim(v));
      applied.push_back(f.key);
    }
  }
  return applied;
}

}  // namespace lead::pipeline
