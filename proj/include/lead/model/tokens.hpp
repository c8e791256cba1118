#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lead::model {

// Reserved vocabulary entries. Content tokens start at kFirstContentId.
inline constexpr std::int32_t kClsId = 0;
inline constexpr std::int32_t kSepId = 1;
inline constexpr std::int32_t kFirstContentId = 2;

// Content tokens of a query or passage; the encoder adds the CLS slot.
struct TokenSequence {
  std::vector<std::int32_t> ids;

  std::size_t length() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

// Throws InvalidInput unless 1 <= length <= max_length and every id < vocab_size.
void validate(const TokenSequence& seq, std::size_t vocab_size, std::size_t max_length);

}  // namespace lead::model
