#include "cmdinj/pipeline.hpp"

#include <map>

#include "cmdinj/baseline.hpp"
#include "cmdinj/error.hpp"
#include "cmdinj/parallel.hpp"

namespace cmdinj {

namespace fs = std::filesystem;

namespace {

template <typename T, typename F>
Json opt_obj(const std::optional<T>& v, F&& fn) {
    return v ? fn(*v) : Json(nullptr);
}

template <typename T, typename F>
std::optional<T> read_obj(const Json& j, const char* key, F&& fn) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return fn(j.at(key));
}

const std::string& case_id_of(const VerdictResult& v) {
    return std::visit([](const auto& x) -> const std::string& { return x.case_id; }, v);
}

const AnalysisVerdict* yes_verdict(const VerdictResult& v) {
    const auto* a = std::get_if<AnalysisVerdict>(&v);
    return a && a->vulnerable ? a : nullptr;
}

std::map<std::string, const CandidateFunction*> index_candidates(const std::vector<CandidateFunction>& candidates) {
    std::map<std::string, const CandidateFunction*> idx;
    for (const auto& c : candidates) idx[c.case_id] = &c;
    return idx;
}

const CandidateFunction& lookup(const std::map<std::string, const CandidateFunction*>& idx, const std::string& id) {
    const auto it = idx.find(id);
    if (it == idx.end()) throw Error(ErrorCode::InconsistentInput, "unknown case id " + id);
    return *it->second;
}

}  // namespace

Json testgen_record_to_json(const TestgenRecord& r) {
    Json j;
    j["case_id"] = r.case_id;
    j["response"] = opt_obj(r.response, raw_response_to_json);
    j["test"] = opt_obj(r.test, security_test_to_json);
    j["error"] = r.error;
    return j;
}

TestgenRecord testgen_record_from_json(const Json& j) {
    try {
        TestgenRecord r;
        r.case_id = j.at("case_id").get<std::string>();
        r.response = read_obj<RawResponse>(j, "response", raw_response_from_json);
        r.test = read_obj<SecurityTest>(j, "test", security_test_from_json);
        r.error = j.at("error").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("test record: ") + e.what());
    }
}

Json execution_record_to_json(const ExecutionRecord& r) {
    Json j;
    j["case_id"] = r.case_id;
    j["test"] = security_test_to_json(r.test);
    j["first_outcome"] = opt_obj(r.first_outcome, outcome_to_json);
    j["outcome"] = opt_obj(r.outcome, outcome_to_json);
    j["attempts"] = r.attempts;
    j["error"] = r.error;
    return j;
}

ExecutionRecord execution_record_from_json(const Json& j) {
    try {
        ExecutionRecord r;
        r.case_id = j.at("case_id").get<std::string>();
        r.test = security_test_from_json(j.at("test"));
        r.first_outcome = read_obj<ExecutionOutcome>(j, "first_outcome", outcome_from_json);
        r.outcome = read_obj<ExecutionOutcome>(j, "outcome", outcome_from_json);
        r.attempts = j.at("attempts").get<int>();
        r.error = j.at("error").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("execution record: ") + e.what());
    }
}

std::vector<VerdictResult> analyze_candidates(const std::vector<CandidateFunction>& candidates, Provider& provider,
                                              const ProviderConfig& cfg) {
    std::vector<std::optional<VerdictResult>> slots(candidates.size());
    parallel_for(candidates.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& c = candidates[i];
        try {
            slots[i] = parse_verdict(provider.submit(build_analysis_prompt(c), cfg), c.case_id);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ProviderTimeout) throw;
            slots[i] = ParseFailure{c.case_id, e.what(), {}};
        }
    });
    std::vector<VerdictResult> out;
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<TestgenRecord> generate_tests(const std::vector<CandidateFunction>& candidates,
                                          const std::vector<VerdictResult>& verdicts, Provider& provider,
                                          const ProviderConfig& cfg) {
    const auto idx = index_candidates(candidates);
    std::vector<const AnalysisVerdict*> todo;
    for (const auto& v : verdicts) {
        if (const auto* yes = yes_verdict(v)) todo.push_back(yes);
    }
    std::vector<TestgenRecord> out(todo.size());
    parallel_for(todo.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& v = *todo[i];
        const auto& c = lookup(idx, v.case_id);
        auto& rec = out[i];
        rec.case_id = v.case_id;
        try {
            rec.response = provider.submit(build_testgen_prompt(c, v.justification), cfg);
            rec.test = parse_test_code(*rec.response, v.case_id);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCodeFound && e.code() != ErrorCode::ProviderTimeout) throw;
            rec.error = e.what();
        }
    });
    return out;
}

std::vector<ExecutionRecord> run_tests(const std::vector<CandidateFunction>& candidates,
                                       const std::vector<TestgenRecord>& tests, const ExecOptions& options) {
    const auto idx = index_candidates(candidates);
    std::vector<const TestgenRecord*> todo;
    for (const auto& t : tests) {
        if (t.test) todo.push_back(&t);
    }
    std::vector<ExecutionRecord> out(todo.size());
    parallel_for(todo.size(), options.parallelism, [&](std::size_t i) {
        const auto& t = *todo[i];
        const auto& c = lookup(idx, t.case_id);
        auto& rec = out[i];
        rec.case_id = t.case_id;
        rec.test = *t.test;
        const fs::path workdir = options.tests_dir / case_slug(t.case_id);
        auto run_once = [&] {
            fs::remove_all(workdir);
            fs::create_directories(workdir);
            const auto path = materialize(rec.test, workdir);
            ++rec.attempts;
            return execute(path, options.limits, options.runner, t.case_id);
        };
        try {
            auto o = run_once();
            rec.first_outcome = o;
            rec.outcome = o;
            rec.test.directly_runnable = o.status != OutcomeStatus::Invalid;
            for (int round = 0; o.status == OutcomeStatus::Invalid; ++round) {
                if (round >= options.max_fix_rounds) {
                    rec.error = "still failing after " + std::to_string(round) + " fix rounds";
                    break;
                }
                SecurityTest fixed;
                try {
                    fixed = auto_fix(rec.test, c, o);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::UnfixableTest) throw;
                    rec.error = e.what();
                    break;
                }
                if (fixed == rec.test) {
                    rec.error = "no further automatic fix applies";
                    break;
                }
                rec.test = std::move(fixed);
                o = run_once();
                rec.outcome = o;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCodeFound) throw;
            rec.error = e.what();
        }
    });
    return out;
}

RunResults evaluate_run(const EvaluationInput& in, const SinkCatalog& catalog) {
    std::map<std::string, const VerdictResult*> verdicts;
    for (const auto& v : in.verdicts) verdicts[case_id_of(v)] = &v;
    std::map<std::string, const TestgenRecord*> tests;
    for (const auto& t : in.tests) tests[t.case_id] = &t;
    std::map<std::string, const ExecutionRecord*> execs;
    for (const auto& e : in.executions) execs[e.case_id] = &e;

    CandidateSet set;
    set.candidates = in.candidates;
    std::map<std::string, BlindspotReason> blind;
    for (const auto& f : flag_blindspots(set, catalog)) blind.emplace(f.case_id, f.reason);

    RunResults run;
    run.model_name = in.model_name.empty() ? "llm" : in.model_name;
    run.provider_mode = in.provider_mode;
    run.manifest = in.manifest;
    run.skipped = in.skipped;

    std::vector<CaseClass> classes;
    std::vector<CaseClass> baseline_classes;
    std::map<std::string, std::string> project_of;
    std::vector<CostInput> cost_inputs;

    for (const auto& c : in.candidates) {
        CaseRecord rec;
        rec.candidate = c;
        const auto vit = verdicts.find(c.case_id);
        rec.verdict = vit != verdicts.end() ? *vit->second : VerdictResult{ParseFailure{c.case_id, "not analyzed", {}}};
        if (const auto tit = tests.find(c.case_id); tit != tests.end()) {
            rec.testgen_response = tit->second->response;
            rec.test = tit->second->test;
            rec.test_error = tit->second->error;
        }
        if (const auto eit = execs.find(c.case_id); eit != execs.end()) {
            rec.test = eit->second->test;
            rec.first_outcome = eit->second->first_outcome;
            rec.outcome = eit->second->outcome;
            rec.attempts = eit->second->attempts;
            if (!eit->second->error.empty()) rec.test_error = eit->second->error;
        }
        if (const auto lit = in.labels.find(c.case_id); lit != in.labels.end()) rec.label = lit->second;
        rec.case_class = classify_case(*rec.verdict, rec.outcome, rec.label).kind;
        rec.baseline_findings = run_rules(c, catalog);
        rec.baseline_class = classify_baseline(c.case_id, !rec.baseline_findings.empty(), rec.label, rec.outcome).kind;
        if (const auto bit = blind.find(c.case_id); bit != blind.end()) rec.blindspot = bit->second;

        classes.push_back({c.case_id, rec.case_class});
        baseline_classes.push_back({c.case_id, rec.baseline_class});
        project_of[c.case_id] = c.project;

        CostInput ci;
        ci.loc = c.loc;
        if (const auto* a = std::get_if<AnalysisVerdict>(&*rec.verdict)) {
            ci.group = a->vulnerable ? "Yes" : "No";
            ci.responses.push_back(a->raw);
        } else {
            ci.group = "Unparsed";
            ci.responses.push_back(std::get<ParseFailure>(*rec.verdict).raw);
        }
        if (rec.testgen_response) ci.responses.push_back(*rec.testgen_response);
        cost_inputs.push_back(std::move(ci));

        if (rec.test) {
            ++run.runnable.generated;
            if (!rec.test->directly_runnable) {
                ++run.runnable.unexecuted;
            } else if (*rec.test->directly_runnable) {
                ++run.runnable.direct;
            } else if (rec.outcome && rec.outcome->status != OutcomeStatus::Invalid) {
                ++run.runnable.fixed;
            } else {
                ++run.runnable.not_runnable;
            }
        }
        run.cases.push_back(std::move(rec));
    }

    run.counts = aggregate(classes, project_of);
    run.metrics = compute_metrics(run.counts.total);
    run.cost = aggregate_cost(cost_inputs, in.prices);
    run.baseline_counts = aggregate(baseline_classes, project_of);
    run.baseline_metrics = compute_metrics(run.baseline_counts.total);
    run.comparison = compare_models({{run.model_name, run.counts.total}, {std::string(kBaselineName), run.baseline_counts.total}},
                                    std::string(kBaselineName));
    return run;
}

void write_verdicts(const fs::path& p, const std::vector<VerdictResult>& v) {
    std::vector<Json> rows;
    for (const auto& x : v) rows.push_back(verdict_to_json(x));
    write_jsonl_file(p, rows);
}

std::vector<VerdictResult> read_verdicts(const fs::path& p) {
    std::vector<VerdictResult> out;
    for (const auto& j : read_jsonl_file(p)) out.push_back(verdict_from_json(j));
    return out;
}

void write_testgen_records(const fs::path& p, const std::vector<TestgenRecord>& v) {
    std::vector<Json> rows;
    for (const auto& x : v) rows.push_back(testgen_record_to_json(x));
    write_jsonl_file(p, rows);
}

std::vector<TestgenRecord> read_testgen_records(const fs::path& p) {
    std::vector<TestgenRecord> out;
    for (const auto& j : read_jsonl_file(p)) out.push_back(testgen_record_from_json(j));
    return out;
}

void write_execution_records(const fs::path& p, const std::vector<ExecutionRecord>& v) {
    std::vector<Json> rows;
    for (const auto& x : v) rows.push_back(execution_record_to_json(x));
    write_jsonl_file(p, rows);
}

std::vector<ExecutionRecord> read_execution_records(const fs::path& p) {
    std::vector<ExecutionRecord> out;
    for (const auto& j : read_jsonl_file(p)) out.push_back(execution_record_from_json(j));
    return out;
}

}  // namespace cmdinj
