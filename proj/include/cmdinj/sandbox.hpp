#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmdinj/json_io.hpp"

namespace cmdinj {

inline constexpr std::size_t kExcerptLimit = 8 * 1024;

enum class OutcomeStatus { Confirmed, Refuted, Invalid };
std::string_view to_string(OutcomeStatus s);
std::optional<OutcomeStatus> outcome_status_from_string(std::string_view s);

struct ResourceLimits {
    double timeout_s = 30.0;
    double grace_s = 1.0;        // SIGTERM-to-SIGKILL allowance is not used; kept for the duration bound
    std::uint64_t memory_mb = 2048;
    std::uint64_t max_file_mb = 64;
};

/// How the runner shim is invoked; the test file path is appended.
struct RunnerCommand {
    std::vector<std::string> argv;
};

/// Default: python3 with the shim next to the executable, else the source copy.
RunnerCommand default_runner();

/// The shim's single-line JSON record.
struct RunRecord {
    std::string status;  // passed | failed | error
    std::optional<std::string> error_kind;
    std::int64_t duration_ms = 0;
    std::string stdout_text;
    std::string stderr_text;
};

/// Throws Error{FormatError} when the line is not a valid record.
RunRecord parse_run_record(std::string_view line);

struct ExecutionOutcome {
    std::string case_id;
    OutcomeStatus status = OutcomeStatus::Invalid;
    std::optional<std::string> error_kind;  // import_error | path_error | timeout | runner_crash | other
    std::string error_detail;               // raw exception class name or crash description
    double duration_s = 0.0;
    bool sentinel_deleted = false;
    std::string runner_status;              // shim status, empty when no record was produced
    std::string stdout_excerpt;
    std::string stderr_excerpt;

    bool operator==(const ExecutionOutcome&) const = default;
};

/// passed -> confirmed, failed -> refuted, anything else -> invalid; a deleted
/// sentinel overrides to confirmed.
OutcomeStatus map_status(std::string_view runner_status, bool sentinel_deleted);

/// Maps an exception class name to an error kind.
std::string error_kind_for(std::string_view exception_class);

/// Runs the materialized test at `test_path` (its parent is the workdir) in a
/// child process group with a scrubbed environment and kills the group on
/// timeout. Throws RunnerNotFound or WorkspaceError.
ExecutionOutcome execute(const std::filesystem::path& test_path, const ResourceLimits& limits,
                         const RunnerCommand& runner = default_runner(), const std::string& case_id = {});

Json outcome_to_json(const ExecutionOutcome& o);
ExecutionOutcome outcome_from_json(const Json& j);

}  // namespace cmdinj
