#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gdgan {

enum class ErrorKind {
    MissingColumn,
    BadLabelValue,
    DuplicateImageId,
    EmptyInput,
    EmptyImage,
    BadRate,
    BadArgument,
    ShapeMismatch,
    DivergenceDetected,
    VersionMismatch,
    CorruptFile,
    UnachievableTarget,
    MissingGenerator,
    StoreWriteFailure,
    IndivisibleBatch,
    OracleFailure,
    DegenerateSample,
    SingleClass,
    MissingArtifact,
    IoError,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. Every failure carries a kind so callers (and tests)
/// can branch on the category without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    /// The message without the kind prefix that what() carries.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

/// Malformed manifest row; `row` is 1-based and counts the header as row 1.
class BadLabelValue : public Error {
public:
    BadLabelValue(std::size_t row, const std::string& detail);
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace gdgan
