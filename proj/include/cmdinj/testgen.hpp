#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmdinj/extractor.hpp"
#include "cmdinj/json_io.hpp"

namespace cmdinj {

struct ExecutionOutcome;

inline constexpr std::string_view kSentinelFileName = "sentinel.txt";
inline constexpr std::string_view kTestFileName = "test_case.py";

enum class FixKind { AddedImport, RewrotePath, InlinedSourceFunction, None };
std::string_view to_string(FixKind kind);
std::optional<FixKind> fix_kind_from_string(std::string_view s);

struct SecurityTest {
    std::string case_id;
    std::string original_code;
    std::string normalized_code;
    std::optional<bool> directly_runnable;  // unset until the first execution
    std::vector<FixKind> applied_fixes;
    std::string extraction_method;          // "fenced" | "unfenced"
    std::vector<std::string> warnings;

    bool operator==(const SecurityTest&) const = default;
};

/// Writes normalized_code to `<workdir>/test_case.py` and the sentinel file
/// next to it. Throws NoCodeFound, WorkspaceError (workdir missing or not
/// empty) or IoError.
std::filesystem::path materialize(const SecurityTest& test, const std::filesystem::path& workdir);

std::string sentinel_contents();

/// Applies, in order: inlining the candidate's source function, adding a
/// missing stdlib import named by the error output, rewriting absolute paths
/// to workdir-relative ones. Throws Error{UnfixableTest} when the failure is
/// outside those categories and nothing was ever fixed. Calling it again with
/// the same evidence returns the test unchanged.
SecurityTest auto_fix(const SecurityTest& test, const CandidateFunction& candidate, const ExecutionOutcome& evidence);

bool is_stdlib_module(std::string_view name);

/// Top-level module name of every `import`/`from ... import` in `code`.
std::vector<std::string> imported_modules(std::string_view code);

Json security_test_to_json(const SecurityTest& t);
SecurityTest security_test_from_json(const Json& j);

}  // namespace cmdinj
