#pragma once

#include <iosfwd>
#include <string>

#include "lead/model/retrieval_model.hpp"

namespace lead::model {

// Checkpoint layout:
//   LEADCKPT 1
//   variant <DE|CB|CE>
//   <header key> <value>            (layers, dims, vocab, positions, seed, ...)
//   params <count>
//   then per parameter: "<name> <rows> <cols>\n" followed by rows*cols raw
//   little-endian IEEE-754 doubles and a newline.
void save_checkpoint(const RetrievalModel& model, std::ostream& out);
void save_checkpoint(const RetrievalModel& model, const std::string& path);
RetrievalModel load_checkpoint(std::istream& in);
RetrievalModel load_checkpoint(const std::string& path);

}  // namespace lead::model
