#include "lead/retrieval/mining.hpp"

#include <algorithm>

#include "lead/error.hpp"
#include "lead/numcore/tensor.hpp"

namespace lead::retrieval {

namespace {

void require_de(const model::RetrievalModel& m, const char* what) {
  if (m.variant() != model::Variant::DualEncoder) {
    throw InvalidParameter(std::string(what) + " needs an embedding model (DE), got " +
                           model::variant_name(m.variant()));
  }
}

const model::TokenSequence& find_query(const TokenTable& queries, const std::string& qid) {
  auto it = queries.find(qid);
  if (it == queries.end()) throw InvalidInput("unknown query id '" + qid + "'");
  return it->second;
}

}  // namespace

FlatIndex build_index(const model::RetrievalModel& de, const TokenTable& passages) {
  require_de(de, "building an index");
  FlatIndex index(de.output_dim());
  for (const auto& [pid, tokens] : passages) index.add(pid, de.embed_passage(tokens));
  return index;
}

Run retrieve(const model::RetrievalModel& de, const FlatIndex& index, const TokenTable& queries,
             std::size_t k) {
  require_de(de, "dense retrieval");
  Run run;
  for (const auto& [qid, tokens] : queries) {
    run[qid] = to_records(qid, search_top_k(index, de.embed_query(tokens), k));
  }
  return run;
}

MinedNegatives mine_hard_negatives(const model::RetrievalModel& de, const TokenTable& passages,
                                   const TokenTable& queries, const Qrels& qrels,
                                   std::size_t top_n) {
  return mine_hard_negatives(de, build_index(de, passages), queries, qrels, top_n);
}

MinedNegatives mine_hard_negatives(const model::RetrievalModel& de, const FlatIndex& index,
                                   const TokenTable& queries, const Qrels& qrels,
                                   std::size_t top_n) {
  require_de(de, "hard-negative mining");
  if (top_n == 0) throw InvalidParameter("top_n must be at least 1");
  MinedNegatives out;
  for (const auto& [qid, tokens] : queries) {
    const std::size_t depth = top_n + qrels.num_relevant(qid);
    auto hits = search_top_k(index, de.embed_query(tokens), depth);
    auto& list = out.lists[qid];
    for (const auto& h : hits) {
      if (list.size() == top_n) break;
      if (qrels.grade(qid, h.id) == 0) list.push_back(h.id);
    }
    if (list.size() < top_n) {
      out.warnings.push_back("query " + qid + ": only " + std::to_string(list.size()) + " of " +
                             std::to_string(top_n) + " negatives available");
    }
  }
  return out;
}

std::vector<RunRecord> rerank(const model::RetrievalModel& m, const std::string& query_id,
                              const model::TokenSequence& query,
                              const std::vector<std::string>& candidates,
                              const TokenTable& passages) {
  num::NoGradGuard no_grad;
  std::vector<Hit> hits;
  hits.reserve(candidates.size());
  const int top = m.effective_layers();
  model::Encoding q_enc;
  if (m.variant() != model::Variant::CrossEncoder) q_enc = m.encode_query(query);
  for (const auto& pid : candidates) {
    auto it = passages.find(pid);
    if (it == passages.end()) throw InvalidInput("unknown candidate passage id '" + pid + "'");
    double s = 0.0;
    if (m.variant() == model::Variant::CrossEncoder) {
      s = m.score(top, m.encode_pair(query, it->second), model::Encoding{}).item();
    } else {
      s = m.score(top, q_enc, m.encode_passage(it->second)).item();
    }
    hits.push_back({pid, s});
  }
  std::sort(hits.begin(), hits.end(), hit_before);
  return to_records(query_id, hits);
}

Run rerank_run(const model::RetrievalModel& m, const Run& first_stage, const TokenTable& queries,
               const TokenTable& passages, std::size_t depth) {
  Run out;
  for (const auto& [qid, records] : first_stage) {
    std::vector<std::string> candidates;
    for (std::size_t i = 0; i < std::min(depth, records.size()); ++i) {
      candidates.push_back(records[i].passage_id);
    }
    out[qid] = rerank(m, qid, find_query(queries, qid), candidates, passages);
  }
  return out;
}

}  // namespace lead::retrieval
