#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lead/distill/types.hpp"
#include "lead/retrieval/mining.hpp"
#include "lead/retrieval/trec.hpp"

namespace lead::synth {

enum class NegativeSource { Random, Mined };

struct BatchOptions {
  NegativeSource source = NegativeSource::Random;
  std::size_t negative_size = 4;
  std::size_t batch_size = 8;
  bool in_batch = false;
  std::uint64_t seed = 0;
};

// Endless stream of training batches. Queries are visited in a seeded
// shuffled order, reshuffled every epoch; each example gets one positive and
// negative_size negatives that are never relevant to its query.
class BatchSampler {
 public:
  // `mined` is required for NegativeSource::Mined and ignored otherwise.
  BatchSampler(const retrieval::TokenTable& passages, const retrieval::TokenTable& queries,
               const retrieval::Qrels& qrels, BatchOptions options,
               const std::map<std::string, std::vector<std::string>>* mined = nullptr);

  distill::Batch next();

  std::size_t epoch() const { return epoch_; }
  // One entry per query that had to be sampled with replacement.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  distill::Passage passage(const std::string& id) const;
  std::vector<std::string> sample_negatives(const std::string& qid);
  void reshuffle();

  const retrieval::TokenTable& passages_;
  const retrieval::TokenTable& queries_;
  const retrieval::Qrels& qrels_;
  BatchOptions options_;
  std::map<std::string, std::vector<std::string>> mined_;
  std::vector<std::string> passage_ids_;
  std::vector<std::string> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
  std::mt19937_64 rng_;
  std::vector<std::string> warnings_;
  std::map<std::string, bool> warned_;
};

// Fills batch.in_batch: for every example, the other examples' pool slots
// whose passages are not relevant to it and not already in its own pool,
// first occurrence of each passage only.
void attach_in_batch(distill::Batch& batch, const retrieval::Qrels& qrels);

}  // namespace lead::synth
