#include "figforge/common/error.hpp"

namespace figforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RootNotFound: return "ROOT_NOT_FOUND";
    case ErrorCode::CatalogWriteFailure: return "CATALOG_WRITE_FAILURE";
    case ErrorCode::EmptyInput: return "EMPTY_INPUT";
    case ErrorCode::MissingSlot: return "MISSING_SLOT";
    case ErrorCode::UnknownTemplate: return "UNKNOWN_TEMPLATE";
    case ErrorCode::EndpointUnreachable: return "ENDPOINT_UNREACHABLE";
    case ErrorCode::MalformedResponse: return "MALFORMED_RESPONSE";
    case ErrorCode::PreconditionViolation: return "PRECONDITION_VIOLATION";
    case ErrorCode::SandboxSetupFailure: return "SANDBOX_SETUP_FAILURE";
    case ErrorCode::EmptyList: return "EMPTY_LIST";
    case ErrorCode::DecodeFailure: return "DECODE_FAILURE";
    case ErrorCode::IoFailure: return "IO_FAILURE";
    case ErrorCode::CountMismatch: return "COUNT_MISMATCH";
    case ErrorCode::MissingAsset: return "MISSING_ASSET";
    case ErrorCode::OcrUnreachable: return "OCR_UNREACHABLE";
    case ErrorCode::SchemaInvalid: return "SCHEMA_INVALID";
    case ErrorCode::MultiQuestion: return "MULTI_QUESTION";
    case ErrorCode::EmptyResponse: return "EMPTY_RESPONSE";
    case ErrorCode::CheckpointIoFailure: return "CHECKPOINT_IO_FAILURE";
    case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
  }
  return "UNKNOWN";
}

}  // namespace figforge
