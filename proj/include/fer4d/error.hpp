#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fer4d {

enum class ErrorKind {
    InvalidArgument,
    EmptyCrop,
    SchemaMismatch,
    DegenerateMesh,
    MissingColors,
    LengthMismatch,
    DegenerateBounds,
    ShapeMismatch,
    EmptyClass,
    MissingSlice,
    TooFewSubjects,
    MissingCell,
    ParseError,
    MissingFile,
    MissingArtifact,
    Io,
    Locked,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Message without the kind prefix, for re-wrapping with more context.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, const std::string& message) {
    if (!condition) fail(ErrorKind::InvalidArgument, message);
}

}  // namespace fer4d
