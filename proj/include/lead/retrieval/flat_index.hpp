#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lead::retrieval {

struct Hit {
  std::string id;
  double score = 0.0;
  bool operator==(const Hit&) const = default;
};

// Orders hits by descending score, then ascending id.
bool hit_before(const Hit& a, const Hit& b);

// Exact inner-product search over a row-major embedding matrix.
class FlatIndex {
 public:
  explicit FlatIndex(std::size_t dim);

  void add(std::string id, std::span<const double> embedding);
  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t i) const;

  // Top-k by inner product; k larger than the corpus returns the full ranking.
  std::vector<Hit> search(std::span<const double> query, std::size_t k) const;

  // Snapshot: "LEADINDEX <count> <dim>\n", one id per line, then the
  // row-major values as raw little-endian doubles.
  void save(std::ostream& out) const;
  static FlatIndex load(std::istream& in);

 private:
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<double> values_;
};

std::vector<Hit> search_top_k(const FlatIndex& index, std::span<const double> query, std::size_t k);

}  // namespace lead::retrieval
