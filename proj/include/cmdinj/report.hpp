#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmdinj/baseline.hpp"
#include "cmdinj/extractor.hpp"
#include "cmdinj/json_io.hpp"
#include "cmdinj/llm.hpp"
#include "cmdinj/sandbox.hpp"
#include "cmdinj/testgen.hpp"
#include "cmdinj/verdicts.hpp"

namespace cmdinj {

struct CaseRecord {
    CandidateFunction candidate;
    std::optional<VerdictResult> verdict;
    std::optional<RawResponse> testgen_response;
    std::optional<SecurityTest> test;
    std::string test_error;  // why no decisive test exists (no code, unfixable, provider failure)
    std::optional<ExecutionOutcome> first_outcome;
    std::optional<ExecutionOutcome> outcome;
    int attempts = 0;
    std::optional<CaseLabel> label;
    CaseClassKind case_class = CaseClassKind::Invalid;
    std::vector<BaselineFinding> baseline_findings;
    CaseClassKind baseline_class = CaseClassKind::UnverifiedNegative;
    std::optional<BlindspotReason> blindspot;

    bool operator==(const CaseRecord&) const = default;
};

struct ManifestTotals {
    std::string root_name;
    std::uint64_t total_files = 0;
    std::uint64_t python_files = 0;
    std::uint64_t python_loc = 0;

    bool operator==(const ManifestTotals&) const = default;
};

/// Tests generated, split by how their first execution went.
struct RunnableStats {
    std::int64_t generated = 0;
    std::int64_t direct = 0;        // first run decisive, no fix
    std::int64_t fixed = 0;         // decisive only after automatic fixes
    std::int64_t not_runnable = 0;  // never decisive
    std::int64_t unexecuted = 0;    // directly_runnable never set

    bool operator==(const RunnableStats&) const = default;
};

struct RunResults {
    std::string model_name;
    std::string provider_mode;
    ManifestTotals manifest;
    std::vector<CaseRecord> cases;
    std::vector<SkipRecord> skipped;
    Aggregate counts;
    MetricsSummary metrics;
    std::vector<CostRecord> cost;
    RunnableStats runnable;
    Aggregate baseline_counts;
    MetricsSummary baseline_metrics;
    std::optional<ComparisonTable> comparison;

    bool operator==(const RunResults&) const = default;
};

inline constexpr std::string_view kBaselineName = "rule-baseline";

Json render_json(const RunResults& run);
RunResults run_from_json(const Json& doc);

std::string render_markdown(const RunResults& run);
std::string render_csv(const RunResults& run);

/// Percent with one decimal ("75.5%"), or "n/a" for an undefined metric.
std::string format_percent(const std::optional<double>& ratio);
/// Signed percentage points with one decimal ("+30.8 pp").
std::string format_delta(const std::optional<double>& delta);

/// One RFC 4180 record (CRLF-terminated).
std::string csv_row(const std::vector<std::string>& fields);

/// Writes run.json, summary.md and cases.csv under `out_dir`.
void write_report(const RunResults& run, const std::filesystem::path& out_dir);

}  // namespace cmdinj
