#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmdinj/extractor.hpp"
#include "cmdinj/json_io.hpp"
#include "cmdinj/sandbox.hpp"
#include "cmdinj/verdicts.hpp"

namespace cmdinj {

enum class Level { Low, Medium, High };
std::string_view to_string(Level l);
std::optional<Level> level_from_string(std::string_view s);

struct BaselineRule {
    std::string rule_id;
    std::string description;
    Level severity;
    Level confidence;
};

/// R1 eval/exec, R2 subprocess with shell=True, R3 subprocess without it,
/// R4 os command/exec/spawn family.
const std::vector<BaselineRule>& baseline_rules();

struct BaselineFinding {
    std::string case_id;
    std::string rule_id;
    Level severity = Level::Low;
    Level confidence = Level::Low;
    int line = 0;
    std::string sink;

    bool operator==(const BaselineFinding&) const = default;
};

std::vector<BaselineFinding> run_rules(const CandidateFunction& c, const SinkCatalog& catalog = SinkCatalog::builtin_default());

/// Ground truth for a flagged case comes from its label, else from the
/// execution outcome of the LLM arm; unflagged cases need a label.
CaseClass classify_baseline(const std::string& case_id, bool flagged, const std::optional<CaseLabel>& label,
                            const std::optional<ExecutionOutcome>& outcome);

/// Maps an external scanner's JSON report ({"results": [{filename, line_number
/// or line, test_id, issue_severity, issue_confidence}]}) onto candidates by
/// file and line span. Paths are compared by suffix.
std::vector<BaselineFinding> ingest_external_report(const Json& report, const std::vector<CandidateFunction>& candidates);

Json finding_to_json(const BaselineFinding& f);
BaselineFinding finding_from_json(const Json& j);

}  // namespace cmdinj
