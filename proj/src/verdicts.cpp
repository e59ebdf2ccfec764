#include "cmdinj/verdicts.hpp"

#include <algorithm>
#include <set>

#include "cmdinj/error.hpp"

namespace cmdinj {

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den <= 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> diff(const std::optional<double>& a, const std::optional<double>& b) {
    if (!a || !b) return std::nullopt;
    return *a - *b;
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
Json opt(const std::optional<std::int64_t>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_double(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

std::optional<std::int64_t> read_int(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::int64_t>();
}

void add_opt(std::optional<std::int64_t>& acc, const std::optional<std::int64_t>& v) {
    if (v) acc = acc.value_or(0) + *v;
}

}  // namespace

std::string_view to_string(LabelSource s) { return s == LabelSource::ManualReview ? "manual_review" : "seeded_fixture"; }

Json label_to_json(const CaseLabel& l) {
    Json j;
    j["case_id"] = l.case_id;
    j["actually_vulnerable"] = l.actually_vulnerable;
    j["source"] = to_string(l.source);
    return j;
}

CaseLabel label_from_json(const Json& j) {
    try {
        CaseLabel l;
        l.case_id = j.at("case_id").get<std::string>();
        l.actually_vulnerable = j.at("actually_vulnerable").get<bool>();
        const auto src = j.value("source", std::string("manual_review"));
        if (src == "manual_review") {
            l.source = LabelSource::ManualReview;
        } else if (src == "seeded_fixture") {
            l.source = LabelSource::SeededFixture;
        } else {
            throw Error(ErrorCode::FormatError, "unknown label source: " + src);
        }
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("label record: ") + e.what());
    }
}

std::map<std::string, CaseLabel> read_labels(const std::filesystem::path& path) {
    std::map<std::string, CaseLabel> labels;
    for (const auto& row : read_jsonl_file(path)) {
        auto l = label_from_json(row);
        if (labels.count(l.case_id)) throw Error(ErrorCode::DuplicateEntry, "two labels for " + l.case_id);
        labels.emplace(l.case_id, std::move(l));
    }
    return labels;
}

std::string_view to_string(CaseClassKind k) {
    switch (k) {
        case CaseClassKind::TP: return "TP";
        case CaseClassKind::FP: return "FP";
        case CaseClassKind::TN: return "TN";
        case CaseClassKind::FN: return "FN";
        case CaseClassKind::Invalid: return "Invalid";
        case CaseClassKind::UnverifiedNegative: return "UnverifiedNegative";
    }
    return "Invalid";
}

std::optional<CaseClassKind> case_class_from_string(std::string_view s) {
    for (auto k : {CaseClassKind::TP, CaseClassKind::FP, CaseClassKind::TN, CaseClassKind::FN, CaseClassKind::Invalid,
                   CaseClassKind::UnverifiedNegative}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

CaseClass classify_case(const VerdictResult& v, const std::optional<ExecutionOutcome>& o,
                        const std::optional<CaseLabel>& l) {
    if (const auto* failure = std::get_if<ParseFailure>(&v)) {
        if (o) throw Error(ErrorCode::InconsistentInput, "execution outcome for unparsed verdict " + failure->case_id);
        return {failure->case_id, CaseClassKind::Invalid};
    }
    const auto& verdict = std::get<AnalysisVerdict>(v);
    if (verdict.vulnerable) {
        if (!o) return {verdict.case_id, CaseClassKind::Invalid};
        switch (o->status) {
            case OutcomeStatus::Confirmed: return {verdict.case_id, CaseClassKind::TP};
            case OutcomeStatus::Refuted: return {verdict.case_id, CaseClassKind::FP};
            case OutcomeStatus::Invalid: return {verdict.case_id, CaseClassKind::Invalid};
        }
    }
    if (o) throw Error(ErrorCode::InconsistentInput, "execution outcome for No verdict " + verdict.case_id);
    if (!l) return {verdict.case_id, CaseClassKind::UnverifiedNegative};
    return {verdict.case_id, l->actually_vulnerable ? CaseClassKind::FN : CaseClassKind::TN};
}

ConfusionCounts& operator+=(ConfusionCounts& a, const ConfusionCounts& b) {
    a.tp += b.tp;
    a.fp += b.fp;
    a.tn += b.tn;
    a.fn += b.fn;
    a.invalid += b.invalid;
    return a;
}

void add_class(ConfusionCounts& c, CaseClassKind k) {
    switch (k) {
        case CaseClassKind::TP: ++c.tp; break;
        case CaseClassKind::FP: ++c.fp; break;
        case CaseClassKind::TN: ++c.tn; break;
        case CaseClassKind::FN: ++c.fn; break;
        case CaseClassKind::Invalid: ++c.invalid; break;
        case CaseClassKind::UnverifiedNegative: break;
    }
}

Aggregate aggregate(const std::vector<CaseClass>& cases, const std::map<std::string, std::string>& project_of) {
    Aggregate agg;
    std::map<std::string, ConfusionCounts> by_project;
    for (const auto& c : cases) {
        const auto it = project_of.find(c.case_id);
        const std::string project = it == project_of.end() ? "(unknown)" : it->second;
        auto& counts = by_project[project];
        counts.scope = project;
        if (c.kind == CaseClassKind::UnverifiedNegative) {
            ++agg.unverified[project];
            ++agg.unverified_total;
            continue;
        }
        add_class(counts, c.kind);
        add_class(agg.total, c.kind);
    }
    for (auto& [_, counts] : by_project) agg.projects.push_back(counts);
    return agg;
}

MetricsSummary compute_metrics(const ConfusionCounts& c) {
    MetricsSummary m;
    m.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    // 2pr/(p+r) reduces to 2tp/(2tp+fp+fn); the reduced form avoids p+r = 0.
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0) {
        m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    }
    return m;
}

std::vector<CostRecord> aggregate_cost(const std::vector<CostInput>& inputs, const ProviderConfig& prices) {
    std::map<std::string, CostRecord> rows;
    rows["Yes"].scope = "Yes";
    rows["No"].scope = "No";
    CostRecord total;
    total.scope = "Total";
    for (CostRecord* r : {&rows["Yes"], &rows["No"], &total}) {
        if (prices.prices_configured) r->dollars = 0.0;
    }
    for (const auto& in : inputs) {
        auto& row = rows[in.group];
        row.scope = in.group;
        if (prices.prices_configured && !row.dollars) row.dollars = 0.0;
        for (CostRecord* r : {&row, &total}) {
            r->cases += 1;
            r->loc += in.loc;
            for (const auto& resp : in.responses) {
                r->wall_time_s += resp.latency_s;
                add_opt(r->input_tokens, resp.input_tokens);
                add_opt(r->output_tokens, resp.output_tokens);
                if (prices.prices_configured) {
                    *r->dollars += static_cast<double>(resp.input_tokens.value_or(0)) * prices.price_per_input_token +
                                   static_cast<double>(resp.output_tokens.value_or(0)) * prices.price_per_output_token;
                }
            }
        }
    }
    std::vector<CostRecord> out{rows["Yes"], rows["No"]};
    for (const auto& [scope, row] : rows) {
        if (scope != "Yes" && scope != "No") out.push_back(row);
    }
    out.push_back(total);
    return out;
}

ComparisonTable compare_models(const std::vector<std::pair<std::string, ConfusionCounts>>& runs,
                               const std::string& reference) {
    if (runs.size() < 2) throw Error(ErrorCode::InvalidArgument, "comparison needs at least two runs");
    std::set<std::string> seen;
    for (const auto& [name, _] : runs) {
        if (!seen.insert(name).second) throw Error(ErrorCode::DuplicateModelName, name);
    }
    ComparisonTable t;
    t.reference = reference.empty() ? runs.back().first : reference;
    if (!seen.count(t.reference)) throw Error(ErrorCode::InvalidArgument, "unknown reference model: " + t.reference);
    MetricsSummary ref;
    for (const auto& [name, counts] : runs) {
        if (name == t.reference) ref = compute_metrics(counts);
    }
    for (const auto& [name, counts] : runs) {
        ComparisonRow row{name, counts, compute_metrics(counts), {}};
        row.delta = {diff(row.metrics.accuracy, ref.accuracy), diff(row.metrics.precision, ref.precision),
                     diff(row.metrics.recall, ref.recall), diff(row.metrics.f1, ref.f1)};
        t.rows.push_back(std::move(row));
    }
    return t;
}

Json counts_to_json(const ConfusionCounts& c) {
    Json j;
    j["scope"] = c.scope;
    j["tp"] = c.tp;
    j["fp"] = c.fp;
    j["tn"] = c.tn;
    j["fn"] = c.fn;
    j["invalid"] = c.invalid;
    return j;
}

ConfusionCounts counts_from_json(const Json& j) {
    try {
        ConfusionCounts c;
        c.scope = j.value("scope", std::string("Total"));
        c.tp = j.at("tp").get<std::int64_t>();
        c.fp = j.at("fp").get<std::int64_t>();
        c.tn = j.at("tn").get<std::int64_t>();
        c.fn = j.at("fn").get<std::int64_t>();
        c.invalid = j.value("invalid", std::int64_t{0});
        if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0 || c.invalid < 0) {
            throw Error(ErrorCode::InvalidArgument, "confusion counts must be >= 0");
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("confusion counts: ") + e.what());
    }
}

Json metrics_to_json(const MetricsSummary& m) {
    Json j;
    j["accuracy"] = opt(m.accuracy);
    j["precision"] = opt(m.precision);
    j["recall"] = opt(m.recall);
    j["f1"] = opt(m.f1);
    return j;
}

MetricsSummary metrics_from_json(const Json& j) {
    return {read_double(j, "accuracy"), read_double(j, "precision"), read_double(j, "recall"), read_double(j, "f1")};
}

Json cost_to_json(const CostRecord& c) {
    Json j;
    j["scope"] = c.scope;
    j["cases"] = c.cases;
    j["loc"] = c.loc;
    j["wall_time_s"] = c.wall_time_s;
    j["input_tokens"] = opt(c.input_tokens);
    j["output_tokens"] = opt(c.output_tokens);
    j["dollars"] = opt(c.dollars);
    return j;
}

CostRecord cost_from_json(const Json& j) {
    CostRecord c;
    c.scope = j.at("scope").get<std::string>();
    c.cases = j.at("cases").get<std::int64_t>();
    c.loc = j.at("loc").get<std::int64_t>();
    c.wall_time_s = j.at("wall_time_s").get<double>();
    c.input_tokens = read_int(j, "input_tokens");
    c.output_tokens = read_int(j, "output_tokens");
    c.dollars = read_double(j, "dollars");
    return c;
}

Json comparison_to_json(const ComparisonTable& t) {
    Json j;
    j["reference"] = t.reference;
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        Json row;
        row["model"] = r.model;
        row["counts"] = counts_to_json(r.counts);
        row["metrics"] = metrics_to_json(r.metrics);
        row["delta"] = Json{{"accuracy", opt(r.delta.accuracy)},
                            {"precision", opt(r.delta.precision)},
                            {"recall", opt(r.delta.recall)},
                            {"f1", opt(r.delta.f1)}};
        rows.push_back(std::move(row));
    }
    j["rows"] = rows;
    return j;
}

ComparisonTable comparison_from_json(const Json& j) {
    ComparisonTable t;
    t.reference = j.at("reference").get<std::string>();
    for (const auto& row : j.at("rows")) {
        ComparisonRow r;
        r.model = row.at("model").get<std::string>();
        r.counts = counts_from_json(row.at("counts"));
        r.metrics = metrics_from_json(row.at("metrics"));
        const auto& d = row.at("delta");
        r.delta = {read_double(d, "accuracy"), read_double(d, "precision"), read_double(d, "recall"), read_double(d, "f1")};
        t.rows.push_back(std::move(r));
    }
    return t;
}

}  // namespace cmdinj
