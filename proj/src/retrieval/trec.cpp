#include "lead/retrieval/trec.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lead/error.hpp"

namespace lead::retrieval {

namespace {

[[noreturn]] void malformed(std::size_t line_no, const std::string& what) {
  throw FormatError("line " + std::to_string(line_no) + ": " + what);
}

std::string format_score(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void Qrels::set(const std::string& query_id, const std::string& passage_id, int grade) {
  if (grade < 0) throw InvalidInput("relevance grades must be non-negative");
  table_[query_id][passage_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& passage_id) const {
  auto q = table_.find(query_id);
  if (q == table_.end()) return 0;
  auto p = q->second.find(passage_id);
  return p == q->second.end() ? 0 : p->second;
}

std::vector<std::string> Qrels::relevant(const std::string& query_id) const {
  std::vector<std::string> out;
  auto q = table_.find(query_id);
  if (q == table_.end()) return out;
  for (const auto& [pid, g] : q->second) {
    if (g > 0) out.push_back(pid);
  }
  return out;
}

std::size_t Qrels::num_relevant(const std::string& query_id) const {
  auto q = table_.find(query_id);
  if (q == table_.end()) return 0;
  return static_cast<std::size_t>(std::count_if(q->second.begin(), q->second.end(),
                                                [](const auto& kv) { return kv.second > 0; }));
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [q, m] : table_) n += m.size();
  return n;
}

std::vector<RunRecord> to_records(const std::string& query_id, const std::vector<Hit>& hits) {
  std::vector<RunRecord> out;
  out.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    out.push_back({query_id, hits[i].id, i + 1, hits[i].score});
  }
  return out;
}

Qrels read_qrels(std::istream& in) {
  Qrels q;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string qid, iter, pid, grade_s, extra;
    if (!(ls >> qid >> iter >> pid >> grade_s) || (ls >> extra)) {
      malformed(line_no, "expected 'qid 0 pid grade'");
    }
    int grade = 0;
    auto [ptr, ec] = std::from_chars(grade_s.data(), grade_s.data() + grade_s.size(), grade);
    if (ec != std::errc() || ptr != grade_s.data() + grade_s.size() || grade < 0) {
      malformed(line_no, "grade must be a non-negative integer");
    }
    q.set(qid, pid, grade);
  }
  return q;
}

Qrels read_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open qrels file: " + path);
  return read_qrels(in);
}

void write_qrels(const Qrels& qrels, std::ostream& out) {
  for (const auto& [qid, judged] : qrels.judgments()) {
    for (const auto& [pid, g] : judged) out << qid << " 0 " << pid << ' ' << g << '\n';
  }
}

void write_qrels(const Qrels& qrels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open qrels file for writing: " + path);
  write_qrels(qrels, out);
}

Run read_run(std::istream& in) {
  Run run;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> first_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string qid, q0, pid, rank_s, score_s, tag, extra;
    if (!(ls >> qid >> q0 >> pid >> rank_s >> score_s >> tag) || (ls >> extra)) {
      malformed(line_no, "expected 'qid Q0 pid rank score tag'");
    }
    RunRecord r{qid, pid, 0, 0.0};
    auto [p1, e1] = std::from_chars(rank_s.data(), rank_s.data() + rank_s.size(), r.rank);
    if (e1 != std::errc() || p1 != rank_s.data() + rank_s.size() || r.rank < 1) {
      malformed(line_no, "rank must be a positive integer");
    }
    auto [p2, e2] = std::from_chars(score_s.data(), score_s.data() + score_s.size(), r.score);
    if (e2 != std::errc() || p2 != score_s.data() + score_s.size()) {
      malformed(line_no, "score is not a number");
    }
    first_line.try_emplace(qid, line_no);
    run[qid].push_back(std::move(r));
  }
  for (auto& [qid, records] : run) {
    std::sort(records.begin(), records.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.rank < b.rank; });
    std::vector<RunRecord> derived = records;
    std::stable_sort(derived.begin(), derived.end(), [](const RunRecord& a, const RunRecord& b) {
      return hit_before({a.passage_id, a.score}, {b.passage_id, b.score});
    });
    for (std::size_t i = 0; i < derived.size(); ++i) {
      if (records[i].rank != i + 1 || derived[i].passage_id != records[i].passage_id) {
        throw FormatError("run for query " + qid + " (from line " +
                          std::to_string(first_line[qid]) +
                          "): ranks disagree with scores at rank " + std::to_string(i + 1));
      }
    }
  }
  return run;
}

Run read_run(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run file: " + path);
  return read_run(in);
}

void write_run(const Run& run, std::ostream& out, const std::string& tag) {
  for (const auto& [qid, records] : run) {
    for (const auto& r : records) {
      out << qid << " Q0 " << r.passage_id << ' ' << r.rank << ' ' << format_score(r.score) << ' '
          << tag << '\n';
    }
  }
}

void write_run(const Run& run, const std::string& path, const std::string& tag) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open run file for writing: " + path);
  write_run(run, out, tag);
}

}  // namespace lead::retrieval
