#include "lead/distill/selection.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "lead/error.hpp"

namespace lead::distill {

namespace {

// Uniform K-subset of [1, n] by partial Fisher-Yates, returned sorted.
std::vector<int> random_subset(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 1);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<int> last_k(std::size_t n, std::size_t k) {
  std::vector<int> out(k);
  std::iota(out.begin(), out.end(), static_cast<int>(n - k + 1));
  return out;
}

}  // namespace

const char* strategy_name(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::Random: return "random";
    case SelectionStrategy::Last: return "last";
    case SelectionStrategy::Skip: return "skip";
  }
  return "?";
}

SelectionStrategy parse_strategy(const std::string& name) {
  if (name == "random") return SelectionStrategy::Random;
  if (name == "last") return SelectionStrategy::Last;
  if (name == "skip") return SelectionStrategy::Skip;
  throw InvalidParameter("unknown selection strategy '" + name + "'");
}

LayerSelection select_layers(SelectionStrategy strategy, std::size_t teacher_layers,
                             std::size_t student_layers, std::size_t k, std::mt19937_64& rng,
                             std::size_t skip_stride) {
  if (k < 1 || student_layers < k || teacher_layers < student_layers) {
    throw InvalidParameter("layer selection requires N >= M >= K >= 1 (got N=" +
                           std::to_string(teacher_layers) + ", M=" + std::to_string(student_layers) +
                           ", K=" + std::to_string(k) + ")");
  }
  LayerSelection s;
  switch (strategy) {
    case SelectionStrategy::Random:
      s.teacher = random_subset(teacher_layers, k, rng);
      s.student = random_subset(student_layers, k, rng);
      break;
    case SelectionStrategy::Last:
      s.teacher = last_k(teacher_layers, k);
      s.student = last_k(student_layers, k);
      break;
    case SelectionStrategy::Skip: {
      if (skip_stride < 1) throw InvalidParameter("skip stride must be at least 1");
      if (1 + (k - 1) * skip_stride > teacher_layers) {
        throw InvalidParameter("skip stride " + std::to_string(skip_stride) +
                               " cannot place " + std::to_string(k) + " layers within " +
                               std::to_string(teacher_layers));
      }
      for (std::size_t i = 0; i < k; ++i) s.teacher.push_back(static_cast<int>(1 + i * skip_stride));
      s.student = last_k(student_layers, k);
      break;
    }
  }
  return s;
}

bool is_valid_selection(const LayerSelection& s, std::size_t teacher_layers,
                        std::size_t student_layers) {
  auto increasing_in = [](const std::vector<int>& v, std::size_t n) {
    if (v.empty()) return false;
    if (v.front() < 1 || static_cast<std::size_t>(v.back()) > n) return false;
    return std::adjacent_find(v.begin(), v.end(), std::greater_equal<int>()) == v.end();
  };
  return s.teacher.size() == s.student.size() && increasing_in(s.teacher, teacher_layers) &&
         increasing_in(s.student, student_layers);
}

}  // namespace lead::distill
