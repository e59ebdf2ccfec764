#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmdinj {

enum class ErrorCode {
    RootNotFound,
    PermissionDenied,
    CatalogParseError,
    EmptyCatalog,
    DuplicateEntry,
    SyntaxError,
    ProviderTimeout,
    ProviderRejected,
    CassetteMiss,
    NoCodeFound,
    UnfixableTest,
    IoError,
    RunnerNotFound,
    WorkspaceError,
    InconsistentInput,
    DuplicateModelName,
    InvalidArgument,
    FormatError,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the library is reported as an Error carrying
/// a code, so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cmdinj
