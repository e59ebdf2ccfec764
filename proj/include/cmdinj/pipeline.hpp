#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmdinj/llm.hpp"
#include "cmdinj/report.hpp"
#include "cmdinj/sandbox.hpp"
#include "cmdinj/testgen.hpp"
#include "cmdinj/verdicts.hpp"

namespace cmdinj {

/// Output of the test generation stage for one Yes verdict.
struct TestgenRecord {
    std::string case_id;
    std::optional<RawResponse> response;
    std::optional<SecurityTest> test;
    std::string error;

    bool operator==(const TestgenRecord&) const = default;
};

/// Output of the execution stage for one generated test.
struct ExecutionRecord {
    std::string case_id;
    SecurityTest test;  // final form, with fixes and directly_runnable set
    std::optional<ExecutionOutcome> first_outcome;
    std::optional<ExecutionOutcome> outcome;
    int attempts = 0;
    std::string error;  // UnfixableTest / NoCodeFound text when the test gave up

    bool operator==(const ExecutionRecord&) const = default;
};

Json testgen_record_to_json(const TestgenRecord& r);
TestgenRecord testgen_record_from_json(const Json& j);
Json execution_record_to_json(const ExecutionRecord& r);
ExecutionRecord execution_record_from_json(const Json& j);

/// One verdict per candidate, in candidate order. Provider timeouts become
/// ParseFailure records; CassetteMiss and ProviderRejected propagate.
std::vector<VerdictResult> analyze_candidates(const std::vector<CandidateFunction>& candidates, Provider& provider,
                                              const ProviderConfig& cfg);

/// One record per Yes verdict.
std::vector<TestgenRecord> generate_tests(const std::vector<CandidateFunction>& candidates,
                                          const std::vector<VerdictResult>& verdicts, Provider& provider,
                                          const ProviderConfig& cfg);

struct ExecOptions {
    ResourceLimits limits;
    RunnerCommand runner = default_runner();
    unsigned parallelism = 1;
    int max_fix_rounds = 3;
    std::filesystem::path tests_dir;  // each case runs in tests_dir/<case_slug>/
};

std::vector<ExecutionRecord> run_tests(const std::vector<CandidateFunction>& candidates,
                                       const std::vector<TestgenRecord>& tests, const ExecOptions& options);

struct EvaluationInput {
    std::vector<CandidateFunction> candidates;
    std::vector<VerdictResult> verdicts;
    std::vector<TestgenRecord> tests;
    std::vector<ExecutionRecord> executions;
    std::map<std::string, CaseLabel> labels;
    std::vector<SkipRecord> skipped;
    ManifestTotals manifest;
    std::string model_name;
    std::string provider_mode;
    ProviderConfig prices;
};

/// Joins the stage outputs, classifies every case for both arms and
/// computes counts, metrics, cost, runnable statistics and the comparison.
RunResults evaluate_run(const EvaluationInput& in, const SinkCatalog& catalog = SinkCatalog::builtin_default());

/// Stage file names inside an output directory.
struct StagePaths {
    std::filesystem::path out;
    std::filesystem::path manifest() const { return out / "manifest.json"; }
    std::filesystem::path candidates() const { return out / "candidates.jsonl"; }
    std::filesystem::path candidate_sources() const { return out / "candidates"; }
    std::filesystem::path verdicts() const { return out / "verdicts.jsonl"; }
    std::filesystem::path tests() const { return out / "tests.jsonl"; }
    std::filesystem::path outcomes() const { return out / "outcomes.jsonl"; }
    std::filesystem::path tests_dir() const { return out / "tests"; }
};

void write_verdicts(const std::filesystem::path& p, const std::vector<VerdictResult>& v);
std::vector<VerdictResult> read_verdicts(const std::filesystem::path& p);
void write_testgen_records(const std::filesystem::path& p, const std::vector<TestgenRecord>& v);
std::vector<TestgenRecord> read_testgen_records(const std::filesystem::path& p);
void write_execution_records(const std::filesystem::path& p, const std::vector<ExecutionRecord>& v);
std::vector<ExecutionRecord> read_execution_records(const std::filesystem::path& p);

}  // namespace cmdinj
