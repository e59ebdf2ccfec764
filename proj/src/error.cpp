#include "cmdinj/error.hpp"

namespace cmdinj {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::RootNotFound: return "RootNotFound";
        case ErrorCode::PermissionDenied: return "PermissionDenied";
        case ErrorCode::CatalogParseError: return "CatalogParseError";
        case ErrorCode::EmptyCatalog: return "EmptyCatalog";
        case ErrorCode::DuplicateEntry: return "DuplicateEntry";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::ProviderTimeout: return "ProviderTimeout";
        case ErrorCode::ProviderRejected: return "ProviderRejected";
        case ErrorCode::CassetteMiss: return "CassetteMiss";
        case ErrorCode::NoCodeFound: return "NoCodeFound";
        case ErrorCode::UnfixableTest: return "UnfixableTest";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::RunnerNotFound: return "RunnerNotFound";
        case ErrorCode::WorkspaceError: return "WorkspaceError";
        case ErrorCode::InconsistentInput: return "InconsistentInput";
        case ErrorCode::DuplicateModelName: return "DuplicateModelName";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::FormatError: return "FormatError";
    }
    return "Unknown";
}

}  // namespace cmdinj
