#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmdinj/json_io.hpp"
#include "cmdinj/llm.hpp"
#include "cmdinj/sandbox.hpp"

namespace cmdinj {

enum class LabelSource { ManualReview, SeededFixture };
std::string_view to_string(LabelSource s);

struct CaseLabel {
    std::string case_id;
    bool actually_vulnerable = false;
    LabelSource source = LabelSource::ManualReview;

    bool operator==(const CaseLabel&) const = default;
};

/// Reads the label JSONL file. Throws FormatError or DuplicateEntry.
std::map<std::string, CaseLabel> read_labels(const std::filesystem::path& path);
Json label_to_json(const CaseLabel& l);
CaseLabel label_from_json(const Json& j);

enum class CaseClassKind { TP, FP, TN, FN, Invalid, UnverifiedNegative };
std::string_view to_string(CaseClassKind k);
std::optional<CaseClassKind> case_class_from_string(std::string_view s);

struct CaseClass {
    std::string case_id;
    CaseClassKind kind = CaseClassKind::Invalid;

    bool operator==(const CaseClass&) const = default;
};

/// Throws Error{InconsistentInput} when an outcome accompanies a No verdict.
/// A Yes verdict without an outcome (no code, unfixable test) is Invalid.
CaseClass classify_case(const VerdictResult& v, const std::optional<ExecutionOutcome>& o,
                        const std::optional<CaseLabel>& l);

struct ConfusionCounts {
    std::string scope;  // project name or "Total"
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;
    std::int64_t invalid = 0;

    std::int64_t valid() const { return tp + fp + tn + fn; }
    std::int64_t all() const { return valid() + invalid; }
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts& operator+=(ConfusionCounts& a, const ConfusionCounts& b);
void add_class(ConfusionCounts& c, CaseClassKind k);

struct Aggregate {
    std::vector<ConfusionCounts> projects;  // sorted by scope
    ConfusionCounts total{"Total", 0, 0, 0, 0, 0};
    std::map<std::string, std::int64_t> unverified;  // per project, side channel
    std::int64_t unverified_total = 0;

    bool operator==(const Aggregate&) const = default;
};

/// `project_of` maps case_id to project; unknown ids land in "(unknown)".
Aggregate aggregate(const std::vector<CaseClass>& cases, const std::map<std::string, std::string>& project_of);

/// Each metric is empty when its denominator is zero.
struct MetricsSummary {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    bool operator==(const MetricsSummary&) const = default;
};

MetricsSummary compute_metrics(const ConfusionCounts& c);

struct CostRecord {
    std::string scope;  // Yes | No | Unparsed | Total
    std::int64_t cases = 0;
    std::int64_t loc = 0;
    double wall_time_s = 0.0;
    std::optional<std::int64_t> input_tokens;
    std::optional<std::int64_t> output_tokens;
    std::optional<double> dollars;

    bool operator==(const CostRecord&) const = default;
};

/// One case's LLM spend: its analysis response plus the test generation
/// response when there was one.
struct CostInput {
    std::string group;  // "Yes", "No" or "Unparsed"
    std::int64_t loc = 0;
    std::vector<RawResponse> responses;
};

/// Rows Yes, No, (Unparsed when present), Total.
std::vector<CostRecord> aggregate_cost(const std::vector<CostInput>& inputs, const ProviderConfig& prices);

struct MetricDeltas {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;

    bool operator==(const MetricDeltas&) const = default;
};

struct ComparisonRow {
    std::string model;
    ConfusionCounts counts;
    MetricsSummary metrics;
    MetricDeltas delta;  // this model minus the reference

    bool operator==(const ComparisonRow&) const = default;
};

struct ComparisonTable {
    std::string reference;
    std::vector<ComparisonRow> rows;

    bool operator==(const ComparisonTable&) const = default;
};

/// Needs at least two runs. `reference` defaults to the last run.
/// Throws DuplicateModelName or InvalidArgument.
ComparisonTable compare_models(const std::vector<std::pair<std::string, ConfusionCounts>>& runs,
                               const std::string& reference = {});

Json counts_to_json(const ConfusionCounts& c);
ConfusionCounts counts_from_json(const Json& j);
Json metrics_to_json(const MetricsSummary& m);
MetricsSummary metrics_from_json(const Json& j);
Json cost_to_json(const CostRecord& c);
CostRecord cost_from_json(const Json& j);
Json comparison_to_json(const ComparisonTable& t);
ComparisonTable comparison_from_json(const Json& j);

}  // namespace cmdinj
