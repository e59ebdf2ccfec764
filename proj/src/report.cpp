#include "cmdinj/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "cmdinj/error.hpp"

namespace cmdinj {

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s == "-0.0" || s == "-0.00") s = s.substr(1);
    return s;
}

std::string md_cell(std::string s) {
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n' || c == '\r') {
            out += ' ';
        } else {
            out += c;
        }
    }
    return out;
}

std::string md_row(const std::vector<std::string>& cells) {
    std::string r = "|";
    for (const auto& c : cells) r += " " + md_cell(c) + " |";
    return r + "\n";
}

std::string md_header(const std::vector<std::string>& cells) {
    std::string sep = "|";
    for (std::size_t i = 0; i < cells.size(); ++i) sep += "---|";
    return md_row(cells) + sep + "\n";
}

std::string opt_int(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : "-"; }


std::string answer_of(const CaseRecord& c) {
    if (!c.verdict) return "-";
    if (const auto* v = std::get_if<AnalysisVerdict>(&*c.verdict)) return v->vulnerable ? "Yes" : "No";
    return "Unparsed";
}

double llm_time(const CaseRecord& c) {
    double t = 0;
    if (c.verdict) {
        std::visit([&](const auto& v) { t += v.raw.latency_s; }, *c.verdict);
    }
    if (c.testgen_response) t += c.testgen_response->latency_s;
    return t;
}

bool decisive(const std::optional<ExecutionOutcome>& o) { return o && o->status != OutcomeStatus::Invalid; }

std::string fix_reason(FixKind k) {
    switch (k) {
        case FixKind::AddedImport: return "missing import";
        case FixKind::RewrotePath: return "path error";
        case FixKind::InlinedSourceFunction: return "missing source function";
        case FixKind::None: return "";
    }
    return "";
}

std::string reason_of(const CaseRecord& c) {
    if (c.verdict && std::holds_alternative<ParseFailure>(*c.verdict)) return std::get<ParseFailure>(*c.verdict).reason;
    if (!c.test) return c.test_error.empty() ? "-" : c.test_error;
    if (c.test->directly_runnable.value_or(false)) return "-";
    std::string r;
    for (auto k : c.test->applied_fixes) {
        const auto s = fix_reason(k);
        if (s.empty() || r.find(s) != std::string::npos) continue;
        r += (r.empty() ? "" : "; ") + s;
    }
    if (!c.test_error.empty()) r += (r.empty() ? "" : "; ") + c.test_error;
    if (r.empty() && c.first_outcome) {
        r = c.first_outcome->error_kind.value_or("failed");
        if (!c.first_outcome->error_detail.empty()) r += " (" + c.first_outcome->error_detail + ")";
    }
    return r.empty() ? "-" : r;
}

std::string direct_of(const CaseRecord& c) {
    if (!c.test || !c.test->directly_runnable) return "-";
    return *c.test->directly_runnable ? "Yes" : "No";
}

std::string modified_of(const CaseRecord& c) {
    if (!c.test || !c.test->directly_runnable || *c.test->directly_runnable) return "-";
    return decisive(c.outcome) && !c.test->applied_fixes.empty() ? "Yes" : "No";
}

std::string actual_of(const CaseRecord& c) {
    if (c.label) return c.label->actually_vulnerable ? "Yes" : "No";
    if (c.outcome && c.outcome->status == OutcomeStatus::Confirmed) return "Yes";
    if (c.outcome && c.outcome->status == OutcomeStatus::Refuted) return "No";
    return "Pending";
}

std::string methods_of(const CandidateFunction& c) {
    std::string m;
    for (const auto& h : c.matched_sinks) {
        const auto name = h.sink + "()";
        if (m.find(name) != std::string::npos) continue;
        m += (m.empty() ? "" : ", ") + name;
    }
    return m;
}

// Per-project "Case N" numbering in report order.
std::vector<std::string> case_numbers(const RunResults& run) {
    std::map<std::string, int> next;
    std::vector<std::string> out;
    for (const auto& c : run.cases) out.push_back("Case " + std::to_string(++next[c.candidate.project]));
    return out;
}

std::vector<std::string> count_cells(const ConfusionCounts& c) {
    return {std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.tn), std::to_string(c.fn),
            std::to_string(c.invalid), std::to_string(c.all())};
}

Json aggregate_to_json(const Aggregate& a) {
    Json j;
    Json projects = Json::array();
    for (const auto& p : a.projects) projects.push_back(counts_to_json(p));
    j["projects"] = projects;
    j["total"] = counts_to_json(a.total);
    Json unverified = Json::object();
    for (const auto& [k, v] : a.unverified) unverified[k] = v;
    j["unverified"] = unverified;
    j["unverified_total"] = a.unverified_total;
    return j;
}

Aggregate aggregate_from_json(const Json& j) {
    Aggregate a;
    for (const auto& p : j.at("projects")) a.projects.push_back(counts_from_json(p));
    a.total = counts_from_json(j.at("total"));
    for (const auto& [k, v] : j.at("unverified").items()) a.unverified[k] = v.get<std::int64_t>();
    a.unverified_total = j.at("unverified_total").get<std::int64_t>();
    return a;
}

template <typename T, typename F>
Json opt_obj(const std::optional<T>& v, F&& fn) {
    return v ? fn(*v) : Json(nullptr);
}

template <typename T, typename F>
std::optional<T> read_obj(const Json& j, const char* key, F&& fn) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return fn(j.at(key));
}

}  // namespace

std::string format_percent(const std::optional<double>& ratio) {
    if (!ratio) return "n/a";
    return fixed(*ratio * 100.0, 1) + "%";
}

std::string format_delta(const std::optional<double>& delta) {
    if (!delta) return "n/a";
    auto s = fixed(*delta * 100.0, 1);
    if (s[0] != '-' && s != "0.0") s = "+" + s;
    return s + " pp";
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) row += ',';
        const auto& f = fields[i];
        if (f.find_first_of(",\"\r\n") == std::string::npos) {
            row += f;
            continue;
        }
        row += '"';
        for (char c : f) {
            if (c == '"') row += '"';
            row += c;
        }
        row += '"';
    }
    return row + "\r\n";
}

Json render_json(const RunResults& run) {
    Json doc;
    doc["format"] = "cmdinj-run/1";
    doc["model"] = run.model_name;
    doc["provider_mode"] = run.provider_mode;
    doc["manifest"] = Json{{"root_name", run.manifest.root_name},
                           {"total_files", run.manifest.total_files},
                           {"python_files", run.manifest.python_files},
                           {"python_loc", run.manifest.python_loc}};
    Json cases = Json::array();
    for (const auto& c : run.cases) {
        Json j;
        j["candidate"] = candidate_to_json(c.candidate);
        j["verdict"] = opt_obj(c.verdict, verdict_to_json);
        j["testgen_response"] = opt_obj(c.testgen_response, raw_response_to_json);
        j["test"] = opt_obj(c.test, security_test_to_json);
        j["test_error"] = c.test_error;
        j["first_outcome"] = opt_obj(c.first_outcome, outcome_to_json);
        j["outcome"] = opt_obj(c.outcome, outcome_to_json);
        j["attempts"] = c.attempts;
        j["label"] = opt_obj(c.label, label_to_json);
        j["class"] = to_string(c.case_class);
        Json findings = Json::array();
        for (const auto& f : c.baseline_findings) findings.push_back(finding_to_json(f));
        j["baseline"] = Json{{"findings", findings}, {"class", to_string(c.baseline_class)}};
        j["blindspot"] = c.blindspot ? Json(to_string(*c.blindspot)) : Json(nullptr);
        cases.push_back(std::move(j));
    }
    doc["cases"] = cases;
    Json skipped = Json::array();
    for (const auto& s : run.skipped) skipped.push_back(Json{{"file", s.file}, {"reason", s.reason}});
    doc["skipped"] = skipped;
    doc["counts"] = aggregate_to_json(run.counts);
    doc["metrics"] = metrics_to_json(run.metrics);
    Json cost = Json::array();
    for (const auto& c : run.cost) cost.push_back(cost_to_json(c));
    doc["cost"] = cost;
    doc["directly_runnable"] = Json{{"generated", run.runnable.generated},
                                    {"direct", run.runnable.direct},
                                    {"fixed", run.runnable.fixed},
                                    {"not_runnable", run.runnable.not_runnable},
                                    {"unexecuted", run.runnable.unexecuted}};
    doc["baseline"] = Json{{"counts", aggregate_to_json(run.baseline_counts)},
                           {"metrics", metrics_to_json(run.baseline_metrics)}};
    doc["comparison"] = opt_obj(run.comparison, comparison_to_json);
    return doc;
}

RunResults run_from_json(const Json& doc) {
    try {
        if (doc.value("format", std::string()) != "cmdinj-run/1") throw Error(ErrorCode::FormatError, "not a run document");
        RunResults run;
        run.model_name = doc.at("model").get<std::string>();
        run.provider_mode = doc.at("provider_mode").get<std::string>();
        const auto& m = doc.at("manifest");
        run.manifest = {m.at("root_name").get<std::string>(), m.at("total_files").get<std::uint64_t>(),
                        m.at("python_files").get<std::uint64_t>(), m.at("python_loc").get<std::uint64_t>()};
        for (const auto& j : doc.at("cases")) {
            CaseRecord c;
            c.candidate = candidate_from_json(j.at("candidate"));
            c.verdict = read_obj<VerdictResult>(j, "verdict", verdict_from_json);
            c.testgen_response = read_obj<RawResponse>(j, "testgen_response", raw_response_from_json);
            c.test = read_obj<SecurityTest>(j, "test", security_test_from_json);
            c.test_error = j.at("test_error").get<std::string>();
            c.first_outcome = read_obj<ExecutionOutcome>(j, "first_outcome", outcome_from_json);
            c.outcome = read_obj<ExecutionOutcome>(j, "outcome", outcome_from_json);
            c.attempts = j.at("attempts").get<int>();
            c.label = read_obj<CaseLabel>(j, "label", label_from_json);
            const auto cls = case_class_from_string(j.at("class").get<std::string>());
            if (!cls) throw Error(ErrorCode::FormatError, "unknown case class");
            c.case_class = *cls;
            for (const auto& f : j.at("baseline").at("findings")) c.baseline_findings.push_back(finding_from_json(f));
            const auto bcls = case_class_from_string(j.at("baseline").at("class").get<std::string>());
            if (!bcls) throw Error(ErrorCode::FormatError, "unknown baseline class");
            c.baseline_class = *bcls;
            if (!j.at("blindspot").is_null()) {
                const auto r = j.at("blindspot").get<std::string>();
                c.blindspot = r == "list_argument" ? BlindspotReason::ListArgument : BlindspotReason::ExternalBinding;
            }
            run.cases.push_back(std::move(c));
        }
        for (const auto& s : doc.at("skipped")) {
            run.skipped.push_back({s.at("file").get<std::string>(), s.at("reason").get<std::string>()});
        }
        run.counts = aggregate_from_json(doc.at("counts"));
        run.metrics = metrics_from_json(doc.at("metrics"));
        for (const auto& c : doc.at("cost")) run.cost.push_back(cost_from_json(c));
        const auto& dr = doc.at("directly_runnable");
        run.runnable = {dr.at("generated").get<std::int64_t>(), dr.at("direct").get<std::int64_t>(),
                        dr.at("fixed").get<std::int64_t>(), dr.at("not_runnable").get<std::int64_t>(),
                        dr.at("unexecuted").get<std::int64_t>()};
        run.baseline_counts = aggregate_from_json(doc.at("baseline").at("counts"));
        run.baseline_metrics = metrics_from_json(doc.at("baseline").at("metrics"));
        run.comparison = read_obj<ComparisonTable>(doc, "comparison", comparison_from_json);
        return run;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("run document: ") + e.what());
    }
}

std::string render_markdown(const RunResults& run) {
    std::ostringstream md;
    md << "# Command injection triage report\n\n";
    md << "- Model: " << (run.model_name.empty() ? "-" : run.model_name) << " (" << (run.provider_mode.empty() ? "-" : run.provider_mode)
       << ")\n";
    md << "- Repository: " << (run.manifest.root_name.empty() ? "-" : run.manifest.root_name) << "\n";
    md << "- Files: " << run.manifest.total_files << " total, " << run.manifest.python_files << " Python, "
       << run.manifest.python_loc << " lines of Python\n";
    md << "- Candidate functions: " << run.cases.size() << "\n\n";

    md << "## Detection results\n\n";
    md << md_header({"Project", "TP", "FP", "TN", "FN", "Invalid", "Total"});
    for (const auto& p : run.counts.projects) {
        auto cells = count_cells(p);
        cells.insert(cells.begin(), p.scope);
        md << md_row(cells);
    }
    {
        auto cells = count_cells(run.counts.total);
        cells.insert(cells.begin(), "Total");
        md << md_row(cells);
    }
    md << "\n";
    if (run.counts.unverified_total > 0) {
        md << "Unverified negatives (No verdict, no label; excluded from the counts above): " << run.counts.unverified_total;
        std::string per;
        for (const auto& [project, n] : run.counts.unverified) per += (per.empty() ? "" : ", ") + project + ": " + std::to_string(n);
        md << " (" << per << ")\n\n";
    }

    md << "## Metrics\n\n";
    md << md_header({"Metric", "Value"});
    md << md_row({"Accuracy", format_percent(run.metrics.accuracy)});
    md << md_row({"Precision", format_percent(run.metrics.precision)});
    md << md_row({"Recall", format_percent(run.metrics.recall)});
    md << md_row({"F1 Score", format_percent(run.metrics.f1)});
    md << "\n";

    md << "## Cost\n\n";
    md << md_header({"Verdict", "Cases", "LOC", "Time (s)", "Input tokens", "Output tokens", "Cost ($)"});
    for (const auto& c : run.cost) {
        md << md_row({c.scope, std::to_string(c.cases), std::to_string(c.loc), fixed(c.wall_time_s, 2),
                      opt_int(c.input_tokens), opt_int(c.output_tokens), c.dollars ? fixed(*c.dollars, 2) : "-"});
    }
    md << "\n";

    md << "## Security tests\n\n";
    md << md_header({"Generated", "Directly runnable", "Runnable after fixes", "Not runnable", "Not executed"});
    md << md_row({std::to_string(run.runnable.generated), std::to_string(run.runnable.direct),
                  std::to_string(run.runnable.fixed), std::to_string(run.runnable.not_runnable),
                  std::to_string(run.runnable.unexecuted)});
    md << "\n";

    if (run.comparison) {
        md << "## Comparison\n\n";
        md << "Deltas are relative to " << run.comparison->reference << ".\n\n";
        md << md_header({"Detector", "TP", "FP", "TN", "FN", "Invalid", "Accuracy", "Precision", "Recall", "F1 Score",
                         "Δ Accuracy", "Δ Precision", "Δ Recall", "Δ F1"});
        for (const auto& r : run.comparison->rows) {
            md << md_row({r.model, std::to_string(r.counts.tp), std::to_string(r.counts.fp), std::to_string(r.counts.tn),
                          std::to_string(r.counts.fn), std::to_string(r.counts.invalid), format_percent(r.metrics.accuracy),
                          format_percent(r.metrics.precision), format_percent(r.metrics.recall),
                          format_percent(r.metrics.f1), format_delta(r.delta.accuracy), format_delta(r.delta.precision),
                          format_delta(r.delta.recall), format_delta(r.delta.f1)});
        }
        md << "\n";
    }

    const auto numbers = case_numbers(run);
    std::vector<std::size_t> blind;
    std::vector<std::size_t> module_level;
    for (std::size_t i = 0; i < run.cases.size(); ++i) {
        if (run.cases[i].blindspot) blind.push_back(i);
        if (run.cases[i].candidate.is_module_level()) module_level.push_back(i);
    }
    if (!blind.empty()) {
        md << "## Blind-spot candidates\n\n";
        md << md_header({"Project", "Case No.", "Function", "Pattern", "LLM's answer", "Class"});
        for (auto i : blind) {
            const auto& c = run.cases[i];
            md << md_row({c.candidate.project, numbers[i], c.candidate.file + ":" + c.candidate.qualname,
                          std::string(to_string(*c.blindspot)), answer_of(c), std::string(to_string(c.case_class))});
        }
        md << "\n";
    }
    if (!module_level.empty()) {
        md << "## Module-level sink calls\n\n";
        md << md_header({"Project", "Case No.", "File", "Lines", "Method that may cause vulnerability", "Class"});
        for (auto i : module_level) {
            const auto& c = run.cases[i];
            md << md_row({c.candidate.project, numbers[i], c.candidate.file,
                          std::to_string(c.candidate.start_line) + "-" + std::to_string(c.candidate.end_line),
                          methods_of(c.candidate), std::string(to_string(c.case_class))});
        }
        md << "\n";
    }
    if (!run.skipped.empty()) {
        md << "## Skipped files\n\n";
        md << md_header({"File", "Reason"});
        for (const auto& s : run.skipped) md << md_row({s.file, s.reason});
        md << "\n";
    }

    md << "## Per-case results\n\n";
    md << md_header({"Project", "Case No.", "Line of code", "Method that may cause vulnerability", "LLM's answer",
                     "LLM time (s)", "Test code executable directly?", "Reason", "Executable with modification?",
                     "Actually vulnerable?"});
    for (std::size_t i = 0; i < run.cases.size(); ++i) {
        const auto& c = run.cases[i];
        md << md_row({c.candidate.project, numbers[i], std::to_string(c.candidate.loc), methods_of(c.candidate),
                      answer_of(c), fixed(llm_time(c), 2), direct_of(c), reason_of(c), modified_of(c), actual_of(c)});
    }
    return md.str();
}

std::string render_csv(const RunResults& run) {
    std::string out = csv_row({"case_id", "Project", "Case No.", "File", "Function", "Line of code",
                               "Method that may cause vulnerability", "LLM's answer", "LLM time (s)",
                               "Test code executable directly?", "Reason", "Executable with modification?",
                               "Actually vulnerable?", "Class", "Baseline class"});
    const auto numbers = case_numbers(run);
    for (std::size_t i = 0; i < run.cases.size(); ++i) {
        const auto& c = run.cases[i];
        out += csv_row({c.candidate.case_id, c.candidate.project, numbers[i], c.candidate.file, c.candidate.qualname,
                        std::to_string(c.candidate.loc), methods_of(c.candidate), answer_of(c), fixed(llm_time(c), 2),
                        direct_of(c), reason_of(c), modified_of(c), actual_of(c), std::string(to_string(c.case_class)),
                        std::string(to_string(c.baseline_class))});
    }
    return out;
}

void write_report(const RunResults& run, const std::filesystem::path& out_dir) {
    try {
        write_json_file(out_dir / "run.json", render_json(run));
        write_file(out_dir / "summary.md", render_markdown(run));
        write_file(out_dir / "cases.csv", render_csv(run));
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(ErrorCode::IoError, e.what());
    }
}

}  // namespace cmdinj
