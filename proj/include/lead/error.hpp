#pragma once

#include <stdexcept>
#include <string>

namespace lead {

enum class ErrorCode {
  InvalidInput = 1,
  InvalidParameter = 2,
  Domain = 3,
  Io = 4,
  Format = 5,
  Divergence = 6,
  Internal = 7,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& m) : Error(ErrorCode::InvalidInput, m) {}
};
struct InvalidParameter : Error {
  explicit InvalidParameter(const std::string& m) : Error(ErrorCode::InvalidParameter, m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error(ErrorCode::Domain, m) {}
};
struct IoError : Error {
  explicit IoError(const std::string& m) : Error(ErrorCode::Io, m) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& m) : Error(ErrorCode::Format, m) {}
};
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& m) : Error(ErrorCode::Divergence, m) {}
};

}  // namespace lead
