#include "iosvqa/error.hpp"

namespace iosvqa {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::DegenerateTopology: return "DegenerateTopology";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::ZeroExtent: return "ZeroExtent";
    case ErrorCode::SinkFailure: return "SinkFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnknownDisease: return "UnknownDisease";
    case ErrorCode::InapplicableDisease: return "InapplicableDisease";
    case ErrorCode::RuleConflict: return "RuleConflict";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::InfeasiblePolicy: return "InfeasiblePolicy";
    case ErrorCode::UnknownSampleId: return "UnknownSampleId";
    case ErrorCode::DuplicatePrediction: return "DuplicatePrediction";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

} // namespace iosvqa
