#include "lead/pipeline/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "lead/error.hpp"

namespace lead::pipeline {

namespace {

constexpr const char* kHeader = "setting\tmethod\tmetric\tseed\tvalue";

void check_row(const ReportRow& r) {
  if (!(r.value >= 0.0 && r.value <= 1.0)) {
    throw InvalidInput("report value " + std::to_string(r.value) + " for " + r.method + "/" +
                       r.metric + " is outside [0, 1]");
  }
  for (const std::string* field : {&r.setting, &r.method, &r.metric}) {
    if (field->empty() || field->find_first_of("\t\n") != std::string::npos) {
      throw InvalidInput("report labels must be non-empty and free of tabs and newlines");
    }
  }
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<ReportRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows) {
    Key k{r.setting, r.method, r.metric};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(r.value);
  }
  std::vector<AggregateRow> out;
  for (const auto& k : order) {
    const auto& v = groups.at(k);
    AggregateRow a{std::get<0>(k), std::get<1>(k), std::get<2>(k), v.size(), 0.0, 0.0};
    for (double x : v) a.mean += x;
    a.mean /= static_cast<double>(v.size());
    if (v.size() < 2) {
      a.stddev = std::numeric_limits<double>::quiet_NaN();
    } else {
      double ss = 0.0;
      for (double x : v) ss += (x - a.mean) * (x - a.mean);
      a.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.push_back(std::move(a));
  }
  return out;
}

AggregateRow find_aggregate(const std::vector<ReportRow>& rows, const std::string& setting,
                            const std::string& method, const std::string& metric) {
  for (auto& a : aggregate(rows)) {
    if (a.setting == setting && a.method == method && a.metric == metric) return a;
  }
  throw InvalidInput("no report rows for " + setting + " / " + method + " / " + metric);
}

void write_tsv(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& r : rows) {
    check_row(r);
    out << r.setting << '\t' << r.method << '\t' << r.metric << '\t' << r.seed << '\t' << fmt(r.value)
        << '\n';
  }
}

std::vector<ReportRow> read_tsv(std::istream& in) {
  std::vector<ReportRow> rows;
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw FormatError("report TSV: missing header line");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 5) {
      throw FormatError("report TSV line " + std::to_string(line_no) + ": expected 5 columns");
    }
    ReportRow r{cols[0], cols[1], cols[2], 0, 0.0};
    auto [p1, e1] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), r.seed);
    auto [p2, e2] = std::from_chars(cols[4].data(), cols[4].data() + cols[4].size(), r.value);
    if (e1 != std::errc() || p1 != cols[3].data() + cols[3].size() || e2 != std::errc() ||
        p2 != cols[4].data() + cols[4].size()) {
      throw FormatError("report TSV line " + std::to_string(line_no) + ": bad seed or value");
    }
    try {
      check_row(r);
    } catch (const InvalidInput& e) {
      throw FormatError("report TSV line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReportRow> read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path);
  return read_tsv(in);
}

void write_markdown(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << "# Results\n";
  const auto groups = aggregate(rows);
  std::vector<std::string> settings;
  for (const auto& g : groups) {
    if (std::find(settings.begin(), settings.end(), g.setting) == settings.end()) {
      settings.push_back(g.setting);
    }
  }
  for (const auto& setting : settings) {
    std::vector<std::string> methods, metrics;
    for (const auto& g : groups) {
      if (g.setting != setting) continue;
      if (std::find(methods.begin(), methods.end(), g.method) == methods.end()) methods.push_back(g.method);
      if (std::find(metrics.begin(), metrics.end(), g.metric) == metrics.end()) metrics.push_back(g.metric);
    }
    out << "\n## " << setting << "\n\n| Method |";
    for (const auto& m : metrics) out << ' ' << m << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < metrics.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& method : methods) {
      out << "| " << method << " |";
      for (const auto& metric : metrics) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const AggregateRow& g) {
          return g.setting == setting && g.method == method && g.metric == metric;
        });
        if (it == groups.end()) {
          out << " |";
          continue;
        }
        out << ' ' << fixed4(it->mean);
        if (it->count > 1) out << " ± " << fixed4(it->stddev);
        out << " (n=" << it->count << ") |";
      }
      out << '\n';
    }
  }
}

void emit_report(const std::vector<ReportRow>& rows, const std::string& prefix) {
  {
    std::ofstream tsv(prefix + ".tsv");
    if (!tsv) throw IoError("cannot write " + prefix + ".tsv");
    write_tsv(rows, tsv);
  }
  std::ofstream md(prefix + ".md");
  if (!md) throw IoError("cannot write " + prefix + ".md");
  write_markdown(rows, md);
}

}  // namespace lead::pipeline
