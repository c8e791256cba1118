#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lead/retrieval/flat_index.hpp"

namespace lead::retrieval {

struct RunRecord {
  std::string query_id;
  std::string passage_id;
  std::size_t rank = 0;
  double score = 0.0;
  bool operator==(const RunRecord&) const = default;
};

// query id -> records ordered by rank (1..k).
using Run = std::map<std::string, std::vector<RunRecord>>;

class Qrels {
 public:
  void set(const std::string& query_id, const std::string& passage_id, int grade);
  // Unjudged pairs are grade 0.
  int grade(const std::string& query_id, const std::string& passage_id) const;
  // Passages with grade > 0.
  std::vector<std::string> relevant(const std::string& query_id) const;
  std::size_t num_relevant(const std::string& query_id) const;
  const std::map<std::string, std::map<std::string, int>>& judgments() const { return table_; }
  std::size_t size() const;
  bool operator==(const Qrels&) const = default;

 private:
  std::map<std::string, std::map<std::string, int>> table_;
};

// Ranks hits (already in hit_before order) as records 1..n.
std::vector<RunRecord> to_records(const std::string& query_id, const std::vector<Hit>& hits);

// "qid 0 pid grade" per line.
Qrels read_qrels(std::istream& in);
Qrels read_qrels(const std::string& path);
void write_qrels(const Qrels& qrels, std::ostream& out);
void write_qrels(const Qrels& qrels, const std::string& path);

// "qid Q0 pid rank score tag" per line. Reading re-derives ranks from the
// scores (descending, ties by ascending passage id) and rejects mismatches.
Run read_run(std::istream& in);
Run read_run(const std::string& path);
void write_run(const Run& run, std::ostream& out, const std::string& tag);
void write_run(const Run& run, const std::string& path, const std::string& tag);

}  // namespace lead::retrieval
