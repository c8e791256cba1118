#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "lead/model/tokens.hpp"
#include "lead/retrieval/mining.hpp"
#include "lead/retrieval/trec.hpp"

namespace lead::synth {

struct CorpusSpec {
  std::size_t num_topics = 20;
  std::size_t passages_per_topic = 100;
  std::size_t queries_per_topic = 10;  // training queries
  std::size_t eval_queries = 50;       // held out, topics assigned round-robin
  std::size_t vocab_size = 512;
  std::size_t query_len = 8;
  std::size_t passage_len = 24;
  double noise_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Topic t owns content ids [begin(t), end(t)); ranges are disjoint and
// together cover as much of [kFirstContentId, vocab_size) as divides evenly.
struct TopicRange {
  std::int32_t begin = 0;
  std::int32_t end = 0;
};
TopicRange topic_range(const CorpusSpec& spec, std::size_t topic);

struct SynthCorpus {
  retrieval::TokenTable passages;
  retrieval::TokenTable train_queries;
  retrieval::TokenTable eval_queries;
  // Covers both query sets: grade 1 for every passage of the query's topic.
  retrieval::Qrels qrels;
  // Topic of every passage and query. Filled by generate(), not persisted.
  std::map<std::string, std::size_t> topic_of;
};

// Deterministic in spec.seed. Throws InvalidParameter if the vocabulary cannot
// give every topic at least one token of its own.
SynthCorpus generate(const CorpusSpec& spec);

// Directory layout: passages.tsv, queries_train.tsv, queries_eval.tsv
// ("id<TAB>space-separated token ids") and qrels.txt (TREC qrels).
void save_corpus(const SynthCorpus& corpus, const std::string& dir);
SynthCorpus load_corpus(const std::string& dir);

retrieval::TokenTable read_token_table(const std::string& path);
void write_token_table(const retrieval::TokenTable& table, const std::string& path);

}  // namespace lead::synth
