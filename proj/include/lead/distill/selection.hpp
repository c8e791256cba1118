#pragma once

#include <cstddef>
#include <random>

#include "lead/distill/types.hpp"

namespace lead::distill {

// Picks K teacher layers out of N and K student layers out of M.
//   Random  independent uniform K-subsets of [1, N] and [1, M], sorted
//   Last    the last K layers of each model
//   Skip    teacher 1, 1 + stride, ..., 1 + (K - 1)·stride; student last K
// Requires N >= M >= K >= 1. Only Random consumes randomness.
LayerSelection select_layers(SelectionStrategy strategy, std::size_t teacher_layers,
                             std::size_t student_layers, std::size_t k, std::mt19937_64& rng,
                             std::size_t skip_stride = 2);

bool is_valid_selection(const LayerSelection& s, std::size_t teacher_layers,
                        std::size_t student_layers);

}  // namespace lead::distill
