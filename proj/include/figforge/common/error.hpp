#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace figforge {

enum class ErrorCode {
  RootNotFound,
  CatalogWriteFailure,
  EmptyInput,
  MissingSlot,
  UnknownTemplate,
  EndpointUnreachable,
  MalformedResponse,
  PreconditionViolation,
  SandboxSetupFailure,
  EmptyList,
  DecodeFailure,
  IoFailure,
  CountMismatch,
  MissingAsset,
  OcrUnreachable,
  SchemaInvalid,
  MultiQuestion,
  EmptyResponse,
  CheckpointIoFailure,
  ConfigInvalid,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the engine surfaces as an Error carrying a code,
// so callers can branch on the code and still print a readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace figforge
