#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lead/error.hpp"
#include "lead/retrieval/flat_index.hpp"
#include "lead/retrieval/metrics.hpp"
#include "lead/retrieval/mining.hpp"
#include "lead/retrieval/trec.hpp"
#include "metric_fixture.hpp"

using namespace lead;
using namespace lead::retrieval;

namespace {

model::ModelConfig tiny(model::Variant v, std::uint64_t seed) {
  model::ModelConfig c;
  c.variant = v;
  c.encoder.vocab_size = 32;
  c.encoder.hidden_dim = 8;
  c.encoder.ff_dim = 16;
  c.encoder.num_layers = 2;
  c.encoder.max_positions = 16;
  c.seed = seed;
  return c;
}

TokenTable random_table(std::mt19937_64& rng, const std::string& prefix, std::size_t n, std::size_t len) {
  std::uniform_int_distribution<std::int32_t> d(2, 31);
  TokenTable t;
  for (std::size_t i = 0; i < n; ++i) {
    model::TokenSequence s;
    for (std::size_t j = 0; j < len; ++j) s.ids.push_back(d(rng));
    t[prefix + std::to_string(i)] = s;
  }
  return t;
}

Run single(const std::string& q, const std::vector<std::string>& ids) {
  Run run;
  double s = 10;
  std::size_t r = 1;
  for (auto& id : ids) run[q].push_back({q, id, r++, s -= 1});
  return run;
}

}  // namespace

TEST_CASE("search_top_k examples") {
  FlatIndex idx(2);
  idx.add("a", std::vector<double>{1, 0});
  idx.add("b", std::vector<double>{0, 1});
  auto hits = search_top_k(idx, std::vector<double>{1, 0}, 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0] == Hit{"a", 1.0});
  auto all = search_top_k(idx, std::vector<double>{1, 1}, 2);
  CHECK(all.size() == 2);
  CHECK(all[0].id == "a");  // tie broken by id
  CHECK(search_top_k(idx, std::vector<double>{1, 0}, 50).size() == 2);
  CHECK_THROWS_AS(search_top_k(idx, std::vector<double>{1, 0}, 0), InvalidParameter);
  CHECK_THROWS_AS(search_top_k(idx, std::vector<double>{1}, 1), InvalidInput);
  CHECK_THROWS_AS(idx.add("c", std::vector<double>{1, 2, 3}), InvalidInput);
  CHECK_THROWS_AS(FlatIndex(0), InvalidParameter);
}

TEST_CASE("search agrees with a full-sort oracle on 100 random corpora") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> coarse(-2, 2);
  for (int corpus = 0; corpus < 100; ++corpus) {
    const std::size_t dim = 1 + static_cast<std::size_t>(corpus % 6);
    FlatIndex idx(dim);
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    for (int i = 0; i < 50; ++i) {
      std::vector<double> e(dim);
      // Every fourth corpus uses coarse integer values to force ties.
      for (double& x : e) x = corpus % 4 == 0 ? coarse(rng) : n(rng);
      std::string id = "d" + std::to_string((i * 37) % 50);
      rows.push_back({id, e});
      idx.add(id, e);
    }
    std::vector<double> q(dim);
    for (double& x : q) x = corpus % 4 == 0 ? coarse(rng) : n(rng);
    std::vector<Hit> oracle;
    for (auto& [id, e] : rows) {
      double s = 0;
      for (std::size_t j = 0; j < dim; ++j) s += q[j] * e[j];
      oracle.push_back({id, s});
    }
    std::sort(oracle.begin(), oracle.end(), [](const Hit& a, const Hit& b) {
      return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    for (std::size_t k : {std::size_t{1}, std::size_t{7}, std::size_t{50}}) {
      auto hits = search_top_k(idx, q, k);
      REQUIRE(hits.size() == k);
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(hits[i].id == oracle[i].id);
        CHECK(hits[i].score == doctest::Approx(oracle[i].score).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("index snapshot round trip") {
  FlatIndex idx(3);
  idx.add("x", std::vector<double>{0.1, -2.5, 1e-300});
  idx.add("y", std::vector<double>{3, 4, 5});
  std::stringstream buf;
  idx.save(buf);
  auto back = FlatIndex::load(buf);
  CHECK(back.ids() == idx.ids());
  CHECK(back.dim() == 3);
  for (std::size_t i = 0; i < 2; ++i) {
    auto a = idx.row(i), b = back.row(i);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
  std::stringstream bad("LEADINDEX 5 3\nx\n");
  CHECK_THROWS_AS(FlatIndex::load(bad), FormatError);
}

TEST_CASE("metric examples") {
  Qrels one;
  one.set("q", "r", 1);
  CHECK(mrr_at_k(single("q", {"r", "a"}), one, 10) == 1.0);
  CHECK(ndcg_at_k(single("q", {"r", "a"}), one, 10) == doctest::Approx(1.0));
  CHECK(mrr_at_k(single("q", {"a", "b", "r"}), one, 10) == doctest::Approx(0.333333).epsilon(1e-6));

  Qrels two;
  two.set("q", "r1", 1);
  two.set("q", "r2", 1);
  auto run = single("q", {"r1", "a", "b", "r2", "c", "d", "e", "f", "g", "h"});
  CHECK(map_at_k(run, two, 10) == doctest::Approx(0.75).epsilon(1e-12));
  // (1 + 1/log2 5) / (1 + 1/log2 3) evaluates to 0.877215.
  CHECK(ndcg_at_k(run, two, 10) == doctest::Approx((1 + 1 / std::log2(5.0)) / (1 + 1 / std::log2(3.0))).epsilon(1e-12));
  CHECK(std::abs(ndcg_at_k(run, two, 10) - 0.877215) < 1e-6);
}

TEST_CASE("metrics on the five-query fixture") {
  auto run = fixture::metric_run();
  auto qrels = fixture::metric_qrels();
  auto m = evaluate_run(run, qrels, 10);
  CHECK(std::abs(m.mrr - fixture::expected_mrr()) < 1e-6);
  CHECK(std::abs(m.map - fixture::expected_map()) < 1e-6);
  CHECK(std::abs(m.recall - fixture::expected_recall()) < 1e-6);
  CHECK(std::abs(m.ndcg - fixture::expected_ndcg()) < 1e-6);
  auto pq = per_query(run, qrels, 10, "ndcg");
  CHECK(pq.size() == 5);
  CHECK(pq.count("q6") == 0);
  CHECK(std::abs(pq["q3"] - fixture::expected_q3_ndcg()) < 1e-12);
}

TEST_CASE("metric edge cases") {
  Qrels q;
  q.set("q", "r", 1);
  auto run = single("q", {"a", "b", "r"});
  CHECK(mrr_at_k(run, q, 2) == 0.0);  // beyond depth
  CHECK(recall_at_k(run, q, 2) == 0.0);
  CHECK_THROWS_AS(mrr_at_k(run, q, 0), InvalidParameter);
  Qrels none;
  none.set("q", "a", 0);
  CHECK_THROWS_AS(mrr_at_k(run, none, 10), InvalidInput);
  CHECK_THROWS_AS(per_query(run, q, 10, "p@10"), InvalidParameter);
}

TEST_CASE("metric properties on random runs") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    Qrels qrels;
    Run run;
    std::vector<std::string> ids;
    for (int i = 0; i < 20; ++i) ids.push_back("p" + std::to_string(i));
    for (int qi = 0; qi < 4; ++qi) {
      std::string q = "q" + std::to_string(qi);
      std::vector<int> grades(20);
      for (auto& g : grades) g = std::uniform_int_distribution<int>(0, 6)(rng) > 4 ? 1 + static_cast<int>(rng() % 3) : 0;
      grades[static_cast<std::size_t>(qi)] = std::max(grades[static_cast<std::size_t>(qi)], 1);
      for (int i = 0; i < 20; ++i) qrels.set(q, ids[static_cast<std::size_t>(i)], grades[static_cast<std::size_t>(i)]);
      auto perm = ids;
      std::shuffle(perm.begin(), perm.end(), rng);
      run[q] = single(q, perm)[q];
    }
    for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}}) {
      auto m = evaluate_run(run, qrels, k);
      for (double v : {m.mrr, m.map, m.recall, m.ndcg}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
      }
    }
    CHECK(recall_at_k(run, qrels, 20) == doctest::Approx(1.0));
    // Ideal order by grade gives nDCG 1.
    Run ideal;
    for (auto& [q, recs] : run) {
      auto perm = ids;
      std::stable_sort(perm.begin(), perm.end(), [&](auto& a, auto& b) { return qrels.grade(q, a) > qrels.grade(q, b); });
      ideal[q] = single(q, perm)[q];
    }
    CHECK(ndcg_at_k(ideal, qrels, 10) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // MRR is non-increasing in the rank of the first relevant passage.
  Qrels q;
  q.set("q", "r", 1);
  double prev = 2.0;
  for (int pos = 0; pos < 12; ++pos) {
    std::vector<std::string> ids;
    for (int i = 0; i < 12; ++i) ids.push_back(i == pos ? "r" : "n" + std::to_string(i));
    double v = mrr_at_k(single("q", ids), q, 10);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("qrels format") {
  std::istringstream in("q1 0 p9 1\nq1 0 p3 0\n\nq2 0 p1 2\n");
  auto q = read_qrels(in);
  CHECK(q.grade("q1", "p9") == 1);
  CHECK(q.grade("q1", "p3") == 0);
  CHECK(q.grade("q1", "zzz") == 0);
  CHECK(q.num_relevant("q1") == 1);
  CHECK(q.relevant("q2") == std::vector<std::string>{"p1"});
  std::ostringstream out;
  write_qrels(q, out);
  std::istringstream again(out.str());
  CHECK(read_qrels(again) == q);

  std::istringstream bad("q1 0 p9 1\nq1 0 p9\n");
  try {
    read_qrels(bad);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream neg("q1 0 p9 -1\n");
  CHECK_THROWS(read_qrels(neg));
  CHECK_THROWS_AS(read_qrels(std::string("/nonexistent/qrels")), IoError);
}

TEST_CASE("run files round trip 1000 records") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 50);
  Run run;
  for (int qi = 0; qi < 10; ++qi) {
    std::string q = "query" + std::to_string(qi);
    std::vector<Hit> hits;
    for (int i = 0; i < 100; ++i) hits.push_back({"doc" + std::to_string(rng() % 100000) + "_" + std::to_string(i), n(rng)});
    std::sort(hits.begin(), hits.end(), hit_before);
    run[q] = to_records(q, hits);
  }
  std::ostringstream out;
  write_run(run, out, "tag");
  std::istringstream in(out.str());
  auto back = read_run(in);
  CHECK(back == run);
}

TEST_CASE("run rank mismatch is rejected") {
  std::istringstream in("q Q0 a 1 1.0 t\nq Q0 b 2 5.0 t\n");
  CHECK_THROWS_AS(read_run(in), FormatError);
  std::istringstream tie("q Q0 b 1 1.0 t\nq Q0 a 2 1.0 t\n");
  CHECK_THROWS_AS(read_run(tie), FormatError);
  std::istringstream ok("q Q0 a 1 1.0 t\nq Q0 b 2 1.0 t\n");
  CHECK(read_run(ok)["q"].size() == 2);
  std::istringstream malformed("q Q0 a one 1.0 t\n");
  CHECK_THROWS_AS(read_run(malformed), FormatError);
}

TEST_CASE("hard negative mining rules") {
  std::mt19937_64 rng(5);
  model::RetrievalModel de(tiny(model::Variant::DualEncoder, 3));
  auto passages = random_table(rng, "p", 60, 6);
  auto queries = random_table(rng, "q", 8, 3);
  auto index = build_index(de, passages);
  auto full = retrieve(de, index, queries, 60);

  SUBCASE("nearest relevant passage is skipped") {
    Qrels qrels;
    for (auto& [qid, recs] : full) qrels.set(qid, recs[0].passage_id, 1);
    auto mined = mine_hard_negatives(de, index, queries, qrels, 1);
    for (auto& [qid, list] : mined.lists) {
      REQUIRE(list.size() == 1);
      CHECK(list[0] == full[qid][1].passage_id);
    }
    CHECK(mined.warnings.empty());
  }
  SUBCASE("no relevant passages gives the top_n nearest") {
    Qrels qrels;
    auto mined = mine_hard_negatives(de, passages, queries, qrels, 5);
    for (auto& [qid, list] : mined.lists) {
      for (std::size_t i = 0; i < 5; ++i) CHECK(list[i] == full[qid][i].passage_id);
    }
  }
  SUBCASE("mined negatives are grade 0 and inside the top (top_n + relevant)") {
    Qrels qrels;
    std::uniform_int_distribution<int> pick(0, 59);
    for (auto& [qid, tokens] : queries)
      for (int i = 0; i < 6; ++i) qrels.set(qid, "p" + std::to_string(pick(rng)), 1);
    const std::size_t top_n = 10;
    auto mined = mine_hard_negatives(de, index, queries, qrels, top_n);
    for (auto& [qid, list] : mined.lists) {
      CHECK(list.size() == top_n);
      std::set<std::string> window;
      for (std::size_t i = 0; i < top_n + qrels.num_relevant(qid); ++i) window.insert(full[qid][i].passage_id);
      for (auto& pid : list) {
        CHECK(qrels.grade(qid, pid) == 0);
        CHECK(window.count(pid) == 1);
      }
    }
  }
  SUBCASE("exhausted corpus gives a short list and a warning") {
    Qrels qrels;
    for (int i = 0; i < 58; ++i) qrels.set("q0", "p" + std::to_string(i), 1);
    auto mined = mine_hard_negatives(de, index, queries, qrels, 5);
    CHECK(mined.lists["q0"].size() == 2);
    REQUIRE(mined.warnings.size() == 1);
    CHECK(mined.warnings[0].find("q0") != std::string::npos);
  }
  SUBCASE("errors") {
    model::RetrievalModel cb(tiny(model::Variant::LateInteraction, 3));
    CHECK_THROWS_AS(build_index(cb, passages), InvalidParameter);
    CHECK_THROWS_AS(mine_hard_negatives(de, index, queries, Qrels{}, 0), InvalidParameter);
  }
}

TEST_CASE("reranking") {
  std::mt19937_64 rng(9);
  auto passages = random_table(rng, "p", 30, 6);
  auto queries = random_table(rng, "q", 5, 3);
  model::RetrievalModel de(tiny(model::Variant::DualEncoder, 1));
  auto index = build_index(de, passages);
  auto first = retrieve(de, index, queries, 20);

  SUBCASE("same DE keeps the order") {
    auto again = rerank_run(de, first, queries, passages, 20);
    for (auto& [qid, recs] : first) {
      REQUIRE(again[qid].size() == recs.size());
      for (std::size_t i = 0; i < recs.size(); ++i) CHECK(again[qid][i].passage_id == recs[i].passage_id);
    }
  }
  SUBCASE("single candidate is rank 1") {
    model::RetrievalModel ce(tiny(model::Variant::CrossEncoder, 2));
    auto r = rerank(ce, "q0", queries["q0"], {"p4"}, passages);
    REQUIRE(r.size() == 1);
    CHECK(r[0].rank == 1);
  }
  SUBCASE("unknown candidate names the id") {
    model::RetrievalModel ce(tiny(model::Variant::CrossEncoder, 2));
    try {
      rerank(ce, "q0", queries["q0"], {"p1", "ghost"}, passages);
      FAIL("expected an error");
    } catch (const InvalidInput& e) {
      CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
  }
  SUBCASE("random cross encoders change the ranking") {
    int changed = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      model::RetrievalModel ce(tiny(model::Variant::CrossEncoder, 100 + seed));
      auto rr = rerank_run(ce, first, queries, passages, 10);
      bool any = false;
      for (auto& [qid, recs] : rr)
        for (std::size_t i = 0; i < recs.size(); ++i) any = any || recs[i].passage_id != first[qid][i].passage_id;
      changed += any;
      for (auto& [qid, recs] : rr)
        for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i - 1].score >= recs[i].score);
    }
    CHECK(changed >= 19);
  }
}
