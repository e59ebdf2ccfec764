#include "cmdinj/baseline.hpp"

#include <algorithm>
#include <cctype>

#include "cmdinj/error.hpp"

namespace cmdinj {

namespace {

const BaselineRule& rule(std::string_view id) {
    for (const auto& r : baseline_rules()) {
        if (r.rule_id == id) return r;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown rule " + std::string(id));
}

bool path_matches(const std::string& reported, const std::string& candidate_file) {
    std::string r = reported;
    while (r.rfind("./", 0) == 0) r = r.substr(2);
    if (r == candidate_file) return true;
    const auto n = candidate_file.size();
    return r.size() > n && r.compare(r.size() - n, n, candidate_file) == 0 && r[r.size() - n - 1] == '/';
}

}  // namespace

std::string_view to_string(Level l) {
    switch (l) {
        case Level::Low: return "low";
        case Level::Medium: return "medium";
        case Level::High: return "high";
    }
    return "low";
}

std::optional<Level> level_from_string(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "low") return Level::Low;
    if (lower == "medium") return Level::Medium;
    if (lower == "high") return Level::High;
    return std::nullopt;
}

const std::vector<BaselineRule>& baseline_rules() {
    static const std::vector<BaselineRule> rules{
        {"R1", "eval/exec call", Level::Medium, Level::High},
        {"R2", "subprocess call with shell=True", Level::High, Level::High},
        {"R3", "subprocess call without shell=True", Level::Low, Level::High},
        {"R4", "os command execution (system/popen/spawn*/exec*/posix_spawn*)", Level::High, Level::Medium},
    };
    return rules;
}

std::vector<BaselineFinding> run_rules(const CandidateFunction& c, const SinkCatalog& catalog) {
    std::vector<BaselineFinding> out;
    for (const auto& hit : c.matched_sinks) {
        const auto* entry = catalog.find(hit.sink);
        if (!entry) continue;
        std::string_view id;
        switch (entry->group) {
            case SinkGroup::Builtin: id = "R1"; break;
            case SinkGroup::Subprocess: id = hit.shell_true ? "R2" : "R3"; break;
            case SinkGroup::Os: id = "R4"; break;
        }
        const auto& r = rule(id);
        out.push_back({c.case_id, r.rule_id, r.severity, r.confidence, hit.line, hit.sink});
    }
    return out;
}

CaseClass classify_baseline(const std::string& case_id, bool flagged, const std::optional<CaseLabel>& label,
                            const std::optional<ExecutionOutcome>& outcome) {
    std::optional<bool> vulnerable;
    if (label) {
        vulnerable = label->actually_vulnerable;
    } else if (outcome && outcome->status != OutcomeStatus::Invalid) {
        vulnerable = outcome->status == OutcomeStatus::Confirmed;
    }
    if (flagged) {
        if (!vulnerable) return {case_id, CaseClassKind::Invalid};
        return {case_id, *vulnerable ? CaseClassKind::TP : CaseClassKind::FP};
    }
    if (!vulnerable) return {case_id, CaseClassKind::UnverifiedNegative};
    return {case_id, *vulnerable ? CaseClassKind::FN : CaseClassKind::TN};
}

std::vector<BaselineFinding> ingest_external_report(const Json& report, const std::vector<CandidateFunction>& candidates) {
    const Json* results = &report;
    if (report.is_object()) {
        if (!report.contains("results")) throw Error(ErrorCode::FormatError, "external report has no results array");
        results = &report.at("results");
    }
    if (!results->is_array()) throw Error(ErrorCode::FormatError, "external report results must be an array");
    std::vector<BaselineFinding> out;
    try {
        for (const auto& r : *results) {
            const auto file = r.at("filename").get<std::string>();
            const int line = r.contains("line_number") ? r.at("line_number").get<int>() : r.at("line").get<int>();
            const auto sev = level_from_string(r.at("issue_severity").get<std::string>());
            const auto conf = level_from_string(r.at("issue_confidence").get<std::string>());
            if (!sev || !conf) throw Error(ErrorCode::FormatError, "unknown severity/confidence level");
            for (const auto& c : candidates) {
                if (!path_matches(file, c.file) || line < c.start_line || line > c.end_line) continue;
                out.push_back({c.case_id, r.at("test_id").get<std::string>(), *sev, *conf, line, ""});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("external report: ") + e.what());
    }
    return out;
}

Json finding_to_json(const BaselineFinding& f) {
    Json j;
    j["case_id"] = f.case_id;
    j["rule_id"] = f.rule_id;
    j["severity"] = to_string(f.severity);
    j["confidence"] = to_string(f.confidence);
    j["line"] = f.line;
    j["sink"] = f.sink;
    return j;
}

BaselineFinding finding_from_json(const Json& j) {
    try {
        BaselineFinding f;
        f.case_id = j.at("case_id").get<std::string>();
        f.rule_id = j.at("rule_id").get<std::string>();
        const auto sev = level_from_string(j.at("severity").get<std::string>());
        const auto conf = level_from_string(j.at("confidence").get<std::string>());
        if (!sev || !conf) throw Error(ErrorCode::FormatError, "unknown level");
        f.severity = *sev;
        f.confidence = *conf;
        f.line = j.at("line").get<int>();
        f.sink = j.value("sink", std::string());
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("baseline finding: ") + e.what());
    }
}

}  // namespace cmdinj
