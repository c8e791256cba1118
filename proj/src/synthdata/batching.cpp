#include "lead/synthdata/batching.hpp"

#include <algorithm>
#include <set>

#include "lead/error.hpp"

namespace lead::synth {

BatchSampler::BatchSampler(const retrieval::TokenTable& passages,
                           const retrieval::TokenTable& queries, const retrieval::Qrels& qrels,
                           BatchOptions options,
                           const std::map<std::string, std::vector<std::string>>* mined)
    : passages_(passages), queries_(queries), qrels_(qrels), options_(options), rng_(options.seed) {
  if (options_.negative_size == 0) throw InvalidParameter("negative_size must be at least 1");
  if (options_.batch_size == 0) throw InvalidParameter("batch_size must be at least 1");
  if (queries_.empty()) throw InvalidInput("no training queries");
  for (const auto& [pid, seq] : passages_) passage_ids_.push_back(pid);
  for (const auto& [qid, seq] : queries_) {
    if (qrels_.num_relevant(qid) == 0) {
      throw InvalidInput("training query " + qid + " has no relevant passage");
    }
    for (const auto& pid : qrels_.relevant(qid)) {
      if (!passages_.count(pid)) throw InvalidInput("relevant passage " + pid + " not in corpus");
    }
    order_.push_back(qid);
  }
  if (options_.source == NegativeSource::Mined) {
    if (mined == nullptr) throw InvalidInput("mined negative source without mined lists");
    for (const auto& qid : order_) {
      auto it = mined->find(qid);
      std::vector<std::string> usable;
      if (it != mined->end()) {
        for (const auto& pid : it->second) {
          if (qrels_.grade(qid, pid) == 0 && passages_.count(pid)) usable.push_back(pid);
        }
      }
      mined_[qid] = std::move(usable);
    }
  }
  reshuffle();
}

void BatchSampler::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

distill::Passage BatchSampler::passage(const std::string& id) const {
  return {id, passages_.at(id)};
}

std::vector<std::string> BatchSampler::sample_negatives(const std::string& qid) {
  const std::size_t n = options_.negative_size;
  std::vector<std::string> out;
  if (options_.source == NegativeSource::Mined) {
    const auto& list = mined_.at(qid);
    if (list.empty()) {
      throw InvalidInput("query " + qid + " has no usable mined negatives");
    }
    if (list.size() >= n) {
      std::vector<std::size_t> idx(list.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng_)]);
        out.push_back(list[idx[i]]);
      }
      return out;
    }
    if (!warned_[qid]) {
      warned_[qid] = true;
      warnings_.push_back("query " + qid + ": " + std::to_string(list.size()) +
                          " mined negatives for negative_size " + std::to_string(n) +
                          "; sampling with replacement");
    }
    std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
    for (std::size_t i = 0; i < n; ++i) out.push_back(list[pick(rng_)]);
    return out;
  }

  const std::size_t available = passage_ids_.size() - qrels_.num_relevant(qid);
  if (available == 0) throw InvalidInput("query " + qid + " has no non-relevant passage");
  std::uniform_int_distribution<std::size_t> pick(0, passage_ids_.size() - 1);
  if (available >= n) {
    std::set<std::string> seen;
    while (out.size() < n) {
      const auto& pid = passage_ids_[pick(rng_)];
      if (qrels_.grade(qid, pid) == 0 && seen.insert(pid).second) out.push_back(pid);
    }
    return out;
  }
  if (!warned_[qid]) {
    warned_[qid] = true;
    warnings_.push_back("query " + qid + ": " + std::to_string(available) +
                        " non-relevant passages for negative_size " + std::to_string(n) +
                        "; sampling with replacement");
  }
  while (out.size() < n) {
    const auto& pid = passage_ids_[pick(rng_)];
    if (qrels_.grade(qid, pid) == 0) out.push_back(pid);
  }
  return out;
}

distill::Batch BatchSampler::next() {
  distill::Batch batch;
  for (std::size_t b = 0; b < options_.batch_size; ++b) {
    if (cursor_ == order_.size()) {
      ++epoch_;
      reshuffle();
    }
    const std::string& qid = order_[cursor_++];
    distill::TrainExample ex;
    ex.query_id = qid;
    ex.query = queries_.at(qid);
    const auto rel = qrels_.relevant(qid);
    std::uniform_int_distribution<std::size_t> pick(0, rel.size() - 1);
    ex.positives.push_back(passage(rel[pick(rng_)]));
    for (const auto& pid : sample_negatives(qid)) ex.negatives.push_back(passage(pid));
    batch.examples.push_back(std::move(ex));
  }
  batch.in_batch.resize(batch.examples.size());
  if (options_.in_batch) attach_in_batch(batch, qrels_);
  return batch;
}

void attach_in_batch(distill::Batch& batch, const retrieval::Qrels& qrels) {
  batch.in_batch.assign(batch.examples.size(), {});
  for (std::size_t i = 0; i < batch.examples.size(); ++i) {
    const auto& ex = batch.examples[i];
    std::set<std::string> seen;
    for (std::size_t s = 0; s < ex.pool_size(); ++s) seen.insert(ex.pool_at(s).id);
    for (std::size_t j = 0; j < batch.examples.size(); ++j) {
      if (j == i) continue;
      const auto& other = batch.examples[j];
      for (std::size_t s = 0; s < other.pool_size(); ++s) {
        const auto& pid = other.pool_at(s).id;
        if (qrels.grade(ex.query_id, pid) > 0) continue;
        if (!seen.insert(pid).second) continue;
        batch.in_batch[i].push_back({j, s});
      }
    }
  }
}

}  // namespace lead::synth
