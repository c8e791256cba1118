#include "lead/synthdata/corpus.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lead/error.hpp"

namespace lead::synth {

namespace {

std::string make_id(char prefix, std::size_t i, std::size_t count) {
  const int width = static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%0*zu", prefix, width, i);
  return buf;
}

model::TokenSequence draw(const CorpusSpec& spec, std::size_t topic, std::size_t len,
                          std::mt19937_64& rng) {
  const TopicRange r = topic_range(spec, topic);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::int32_t> own(r.begin, r.end - 1);
  std::uniform_int_distribution<std::int32_t> any(model::kFirstContentId,
                                                  static_cast<std::int32_t>(spec.vocab_size) - 1);
  model::TokenSequence s;
  s.ids.reserve(len);
  for (std::size_t i = 0; i < len; ++i) s.ids.push_back(coin(rng) < spec.noise_rate ? any(rng) : own(rng));
  return s;
}

}  // namespace

void CorpusSpec::validate() const {
  if (num_topics == 0 || passages_per_topic == 0 || queries_per_topic == 0 || eval_queries == 0 ||
      vocab_size == 0 || query_len == 0 || passage_len == 0) {
    throw InvalidParameter("corpus sizes must all be positive");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
    throw InvalidParameter("noise_rate must lie in [0, 1)");
  }
  if (vocab_size < static_cast<std::size_t>(model::kFirstContentId) + num_topics) {
    throw InvalidParameter("vocab_size " + std::to_string(vocab_size) + " is too small for " +
                           std::to_string(num_topics) + " disjoint topic ranges");
  }
}

TopicRange topic_range(const CorpusSpec& spec, std::size_t topic) {
  if (topic >= spec.num_topics) throw InvalidInput("topic index out of range");
  const std::size_t width = (spec.vocab_size - model::kFirstContentId) / spec.num_topics;
  const auto begin = static_cast<std::int32_t>(model::kFirstContentId + topic * width);
  return {begin, begin + static_cast<std::int32_t>(width)};
}

SynthCorpus generate(const CorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SynthCorpus c;
  const std::size_t np = spec.num_topics * spec.passages_per_topic;
  const std::size_t nt = spec.num_topics * spec.queries_per_topic;
  std::vector<std::vector<std::string>> topic_passages(spec.num_topics);

  for (std::size_t t = 0; t < spec.num_topics; ++t) {
    for (std::size_t j = 0; j < spec.passages_per_topic; ++j) {
      const std::string id = make_id('p', t * spec.passages_per_topic + j, np);
      c.passages[id] = draw(spec, t, spec.passage_len, rng);
      c.topic_of[id] = t;
      topic_passages[t].push_back(id);
    }
  }
  auto add_query = [&](retrieval::TokenTable& table, const std::string& id, std::size_t t) {
    table[id] = draw(spec, t, spec.query_len, rng);
    c.topic_of[id] = t;
    for (const auto& pid : topic_passages[t]) c.qrels.set(id, pid, 1);
  };
  for (std::size_t t = 0; t < spec.num_topics; ++t) {
    for (std::size_t j = 0; j < spec.queries_per_topic; ++j) {
      add_query(c.train_queries, make_id('t', t * spec.queries_per_topic + j, nt), t);
    }
  }
  for (std::size_t i = 0; i < spec.eval_queries; ++i) {
    add_query(c.eval_queries, make_id('e', i, spec.eval_queries), i % spec.num_topics);
  }
  return c;
}

retrieval::TokenTable read_token_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  retrieval::TokenTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected 'id<TAB>tokens'");
    }
    model::TokenSequence seq;
    std::istringstream ts(line.substr(tab + 1));
    std::string tok;
    while (ts >> tok) {
      std::int32_t v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size() || v < 0) {
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad token id '" + tok + "'");
      }
      seq.ids.push_back(v);
    }
    if (seq.ids.empty()) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": empty token sequence");
    }
    if (!table.emplace(line.substr(0, tab), std::move(seq)).second) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": duplicate id");
    }
  }
  return table;
}

void write_token_table(const retrieval::TokenTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& [id, seq] : table) {
    out << id << '\t';
    for (std::size_t i = 0; i < seq.ids.size(); ++i) out << (i ? " " : "") << seq.ids[i];
    out << '\n';
  }
}

void save_corpus(const SynthCorpus& corpus, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  const std::filesystem::path d(dir);
  write_token_table(corpus.passages, (d / "passages.tsv").string());
  write_token_table(corpus.train_queries, (d / "queries_train.tsv").string());
  write_token_table(corpus.eval_queries, (d / "queries_eval.tsv").string());
  retrieval::write_qrels(corpus.qrels, (d / "qrels.txt").string());
}

SynthCorpus load_corpus(const std::string& dir) {
  const std::filesystem::path d(dir);
  SynthCorpus c;
  c.passages = read_token_table((d / "passages.tsv").string());
  c.train_queries = read_token_table((d / "queries_train.tsv").string());
  c.eval_queries = read_token_table((d / "queries_eval.tsv").string());
  c.qrels = retrieval::read_qrels((d / "qrels.txt").string());
  for (const auto* table : {&c.train_queries, &c.eval_queries}) {
    for (const auto& [qid, seq] : *table) {
      if (c.qrels.num_relevant(qid) == 0) {
        throw FormatError("query " + qid + " has no relevant passage in qrels.txt");
      }
    }
  }
  return c;
}

}  // namespace lead::synth
