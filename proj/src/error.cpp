#include "fer4d/error.hpp"

namespace fer4d {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::EmptyCrop: return "EmptyCrop";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::DegenerateMesh: return "DegenerateMesh";
        case ErrorKind::MissingColors: return "MissingColors";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::DegenerateBounds: return "DegenerateBounds";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::MissingSlice: return "MissingSlice";
        case ErrorKind::TooFewSubjects: return "TooFewSubjects";
        case ErrorKind::MissingCell: return "MissingCell";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::MissingArtifact: return "MissingArtifact";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Locked: return "Locked";
    }
    return "Unknown";
}

}  // namespace fer4d
