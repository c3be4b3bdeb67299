#include "gdgan/error.hpp"

namespace gdgan {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MissingColumn: return "MissingColumn";
        case ErrorKind::BadLabelValue: return "BadLabelValue";
        case ErrorKind::DuplicateImageId: return "DuplicateImageId";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::EmptyImage: return "EmptyImage";
        case ErrorKind::BadRate: return "BadRate";
        case ErrorKind::BadArgument: return "BadArgument";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::DivergenceDetected: return "DivergenceDetected";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::CorruptFile: return "CorruptFile";
        case ErrorKind::UnachievableTarget: return "UnachievableTarget";
        case ErrorKind::MissingGenerator: return "MissingGenerator";
        case ErrorKind::StoreWriteFailure: return "StoreWriteFailure";
        case ErrorKind::IndivisibleBatch: return "IndivisibleBatch";
        case ErrorKind::OracleFailure: return "OracleFailure";
        case ErrorKind::DegenerateSample: return "DegenerateSample";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::MissingArtifact: return "MissingArtifact";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

BadLabelValue::BadLabelValue(std::size_t row, const std::string& detail)
    : Error(ErrorKind::BadLabelValue, "row " + std::to_string(row) + ": " + detail), row_(row) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace gdgan
