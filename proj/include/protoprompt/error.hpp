#pragma once

#include <stdexcept>
#include <string>

namespace protoprompt {

enum class ErrorCode {
  kInvalidArgument,
  kEmptySupport,
  kBackendUnavailable,
  kClassNotFound,
  kCorruptDataset,
  kEmptyDataset,
  kSchemaError,
  kInvalidComparison,
  kNonFiniteLoss,
  kConfigError,
  kIoError,
};

const char* to_string(ErrorCode code);

// Every library failure is reported through this type; `code()` lets the CLI
// map failures onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace protoprompt
