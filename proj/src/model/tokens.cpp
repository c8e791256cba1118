#include "lead/model/tokens.hpp"

#include <string>

#include "lead/error.hpp"

namespace lead::model {

void validate(const TokenSequence& seq, std::size_t vocab_size, std::size_t max_length) {
  if (seq.ids.empty()) throw InvalidInput("token sequence is empty");
  if (seq.ids.size() > max_length) {
    throw InvalidInput("token sequence of length " + std::to_string(seq.ids.size()) +
                       " exceeds maximum " + std::to_string(max_length));
  }
  for (auto id : seq.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw InvalidInput("token id " + std::to_string(id) + " outside vocabulary of size " +
                         std::to_string(vocab_size));
    }
  }
}

}  // namespace lead::model
