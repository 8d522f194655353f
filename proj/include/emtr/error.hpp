#pragma once

#include <stdexcept>
#include <string>

namespace emtr {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Parse,
  DegenerateCloud,
  EmptyCorrespondence,
  StageViolation,
  Internal,
};

/// Exception type thrown by every module of the library. The C API maps
/// `code()` onto `emtr_status`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace emtr
