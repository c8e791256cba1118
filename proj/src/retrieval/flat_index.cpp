#include "lead/retrieval/flat_index.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "lead/error.hpp"

namespace lead::retrieval {

bool hit_before(const Hit& a, const Hit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

FlatIndex::FlatIndex(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InvalidParameter("index dimension must be positive");
}

void FlatIndex::add(std::string id, std::span<const double> embedding) {
  if (embedding.size() != dim_) throw InvalidInput("embedding dimension does not match index");
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), embedding.begin(), embedding.end());
}

std::span<const double> FlatIndex::row(std::size_t i) const {
  return std::span<const double>(values_).subspan(i * dim_, dim_);
}

std::vector<Hit> FlatIndex::search(std::span<const double> query, std::size_t k) const {
  if (k < 1) throw InvalidParameter("k must be at least 1");
  if (query.size() != dim_) throw InvalidInput("query dimension does not match index");
  std::vector<Hit> hits;
  hits.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const double* r = values_.data() + i * dim_;
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += r[j] * query[j];
    hits.push_back({ids_[i], s});
  }
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    hit_before);
  hits.resize(keep);
  return hits;
}

void FlatIndex::save(std::ostream& out) const {
  out << "LEADINDEX " << ids_.size() << ' ' << dim_ << '\n';
  for (const auto& id : ids_) out << id << '\n';
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
  if (!out) throw IoError("failed writing index snapshot");
}

FlatIndex FlatIndex::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty index snapshot");
  std::istringstream hs(line);
  std::string magic;
  std::size_t count = 0, dim = 0;
  if (!(hs >> magic >> count >> dim) || magic != "LEADINDEX") {
    throw FormatError("bad index snapshot header");
  }
  FlatIndex idx(dim);
  idx.ids_.resize(count);
  for (auto& id : idx.ids_) {
    if (!std::getline(in, id)) throw FormatError("index snapshot truncated in ids");
  }
  idx.values_.resize(count * dim);
  in.read(reinterpret_cast<char*>(idx.values_.data()),
          static_cast<std::streamsize>(idx.values_.size() * sizeof(double)));
  if (!in) throw FormatError("index snapshot truncated in values");
  return idx;
}

std::vector<Hit> search_top_k(const FlatIndex& index, std::span<const double> query, std::size_t k) {
  return index.search(query, k);
}

}  // namespace lead::retrieval
