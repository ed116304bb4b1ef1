#pragma once

#include <stdexcept>
#include <string>

namespace qsync {

// Machine-parsable failure categories. The CLI prints them as the error prefix.
enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  out_of_range,
  degenerate,
  divergence,
  io,
  parse,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qsync
