#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lead::pipeline {

struct ReportRow {
  std::string setting;  // e.g. "4CB -> 2DE"
  std::string method;
  std::string metric;   // e.g. "MRR@10"
  std::uint64_t seed = 0;
  double value = 0.0;   // in [0, 1]
  bool operator==(const ReportRow&) const = default;
};

struct AggregateRow {
  std::string setting;
  std::string method;
  std::string metric;
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; NaN for a single seed
};

// Groups by (setting, method, metric) in order of first appearance.
std::vector<AggregateRow> aggregate(const std::vector<ReportRow>& rows);

// Mean of one (setting, method, metric) group; throws InvalidInput if absent.
AggregateRow find_aggregate(const std::vector<ReportRow>& rows, const std::string& setting,
                            const std::string& method, const std::string& metric);

// Tab-separated "setting method metric seed value" with a header line. Values
// use shortest round-trip formatting, so parsing gives identical rows.
void write_tsv(const std::vector<ReportRow>& rows, std::ostream& out);
std::vector<ReportRow> read_tsv(std::istream& in);
std::vector<ReportRow> read_tsv(const std::string& path);

// One table per setting: a row per method, a "mean ± std (n)" column per metric.
void write_markdown(const std::vector<ReportRow>& rows, std::ostream& out);

// Writes <prefix>.tsv and <prefix>.md.
void emit_report(const std::vector<ReportRow>& rows, const std::string& prefix);

}  // namespace lead::pipeline
