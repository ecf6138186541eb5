#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace costsens {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  InputNotFound,
  Io,
  Schema,
  Parse,
  EmptyDataset,
  NoPositiveCost,
  SingularDesign,
  EmptyFit,
  ZeroProbability,
  MgfDomain,
  Separation,
  CorrelationModel,
  Config,
  InvalidArgument,
  NotConverged,
};

/// Stable machine-readable name ("input-not-found", "mgf-domain", ...).
std::string_view error_code_name(ErrorCode code) noexcept;

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

}  // namespace costsens
