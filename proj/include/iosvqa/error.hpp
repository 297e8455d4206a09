#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iosvqa {

enum class ErrorCode {
    // mesh-io
    UnknownFormat,
    UnsupportedFormat,
    MalformedFile,
    DegenerateTopology,
    // geometry
    EmptyMesh,
    EmptyInput,
    DegenerateConfiguration,
    ZeroExtent,
    // pc-format
    SinkFailure,
    BadMagic,
    UnsupportedVersion,
    Truncated,
    InvariantViolation,
    // vqa-builder
    SchemaViolation,
    UnknownDisease,
    InapplicableDisease,
    RuleConflict,
    MissingTemplate,
    EmptySource,
    InfeasiblePolicy,
    // eval
    UnknownSampleId,
    DuplicatePrediction,
    // plumbing
    Io,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above; the
// message is meant for humans and always starts with the code name.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace iosvqa
