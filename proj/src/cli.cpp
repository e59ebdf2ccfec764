#include "cmdinj/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cmdinj/baseline.hpp"
#include "cmdinj/corpus.hpp"
#include "cmdinj/error.hpp"
#include "cmdinj/extractor.hpp"
#include "cmdinj/json_io.hpp"
#include "cmdinj/llm.hpp"
#include "cmdinj/pipeline.hpp"
#include "cmdinj/report.hpp"
#include "cmdinj/sandbox.hpp"

namespace cmdinj {
namespace {

namespace fs = std::filesystem;

// Thrown for flag combinations CLI11 cannot express; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr const char* kAnalysisInfo = "analysis.json";
constexpr const char* kRunFile = "run.json";
constexpr const char* kBaselineFile = "baseline.json";
constexpr const char* kComparisonFile = "comparison.json";

struct ProviderFlags {
    std::string provider;
    std::string model;
    std::string endpoint;
    std::string cassette;
    bool record = false;
};

struct ExecFlags {
    double timeout_s = 0;
    unsigned parallelism = 0;
    std::string runner;
    int max_fix_rounds = -1;
};

struct ExtractFlags {
    std::string sinks;
    std::string project;
    bool project_per_dir = false;
    unsigned parallelism = 0;
};

// Everything the subcommands read; filled from --config, then from flags.
struct Settings {
    Json config = Json::object();
    std::string config_path;
    std::string out;
    ProviderFlags provider;
    ExecFlags exec;
    ExtractFlags extract;
    std::vector<std::string> ignore;
    std::string labels;
    std::string external_report;
    std::string reference;
};

Json section(const Settings& s, const char* key) {
    if (s.config.contains(key) && s.config.at(key).is_object()) return s.config.at(key);
    return Json::object();
}

fs::path out_dir(const Settings& s, const fs::path& input_file) {
    if (!s.out.empty()) return s.out;
    const auto parent = input_file.parent_path();
    return parent.empty() ? fs::path(".") : parent;
}

fs::path sibling(const fs::path& of, const char* name) {
    const auto parent = of.parent_path();
    return (parent.empty() ? fs::path(".") : parent) / name;
}

ProviderConfig provider_config(const Settings& s) {
    auto cfg = provider_config_from_json(section(s, "provider"));
    if (!s.provider.provider.empty()) cfg.provider_id = s.provider.provider;
    if (!s.provider.model.empty()) cfg.model_name = s.provider.model;
    if (!s.provider.endpoint.empty()) cfg.endpoint = s.provider.endpoint;
    return cfg;
}

std::string cassette_path(const Settings& s) {
    if (!s.provider.cassette.empty()) return s.provider.cassette;
    const auto p = section(s, "provider");
    return p.contains("cassette") ? p.at("cassette").get<std::string>() : std::string();
}

bool provider_given(const Settings& s) {
    return !s.provider.provider.empty() || section(s, "provider").contains("provider_id");
}

// A provider plus the hook that persists a recorded cassette.
struct ProviderHandle {
    std::unique_ptr<Provider> live;
    std::unique_ptr<Provider> active;
    RecordingProvider* recorder = nullptr;
    std::string mode;
    std::string cassette;

    Provider& get() { return *active; }
    void finish() {
        if (!recorder) return;
        auto merged = fs::exists(cassette) ? Cassette::load(cassette) : Cassette{};
        for (const auto& e : recorder->cassette().entries()) merged.put(e);
        merged.save(cassette);
    }
};

ProviderHandle make_provider(const Settings& s, const ProviderConfig& cfg) {
    const auto cassette = cassette_path(s);
    const bool has_provider = provider_given(s);
    if (!has_provider && cassette.empty()) {
        throw UsageError("a provider (--provider) or a cassette (--cassette) is required");
    }
    if (s.provider.record && (!has_provider || cassette.empty())) {
        throw UsageError("--record needs both --provider and --cassette");
    }
    ProviderHandle h;
    h.cassette = cassette;
    if (!cassette.empty() && !s.provider.record) {
        h.active = std::make_unique<ReplayProvider>(Cassette::load(cassette));
        h.mode = "replay";
        return h;
    }
    std::shared_ptr<RateLimiter> limiter;
    if (cfg.rate_limit_requests > 0) {
        limiter = std::make_shared<RateLimiter>(cfg.rate_limit_requests, cfg.rate_limit_interval_s);
    }
    auto live = std::make_unique<LiveProvider>(std::make_shared<HttplibTransport>(), limiter);
    if (s.provider.record) {
        h.live = std::move(live);
        auto rec = std::make_unique<RecordingProvider>(*h.live);
        h.recorder = rec.get();
        h.active = std::move(rec);
        h.mode = "record";
    } else {
        h.active = std::move(live);
        h.mode = "live";
    }
    return h;
}

std::vector<std::string> split_words(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    return words;
}

ExecOptions exec_options(const Settings& s, const fs::path& tests_dir) {
    ExecOptions opt;
    const auto j = section(s, "exec");
    opt.limits.timeout_s = j.value("timeout_s", opt.limits.timeout_s);
    opt.limits.memory_mb = j.value("memory_mb", opt.limits.memory_mb);
    opt.limits.max_file_mb = j.value("max_file_mb", opt.limits.max_file_mb);
    opt.parallelism = j.value("parallelism", opt.parallelism);
    opt.max_fix_rounds = j.value("max_fix_rounds", opt.max_fix_rounds);
    if (j.contains("runner")) opt.runner.argv = j.at("runner").get<std::vector<std::string>>();
    if (s.exec.timeout_s > 0) opt.limits.timeout_s = s.exec.timeout_s;
    if (s.exec.parallelism > 0) opt.parallelism = s.exec.parallelism;
    if (s.exec.max_fix_rounds >= 0) opt.max_fix_rounds = s.exec.max_fix_rounds;
    if (!s.exec.runner.empty()) opt.runner.argv = split_words(s.exec.runner);
    if (opt.limits.timeout_s <= 0) throw UsageError("--exec-timeout-s must be positive");
    opt.tests_dir = tests_dir;
    return opt;
}

SinkCatalog catalog_for(const Settings& s) {
    auto path = s.extract.sinks;
    if (path.empty()) path = section(s, "extract").value("sinks", std::string());
    return path.empty() ? SinkCatalog::builtin_default() : load_sink_catalog(fs::path(path));
}

ExtractOptions extract_options(const Settings& s) {
    const auto j = section(s, "extract");
    ExtractOptions opt;
    opt.project = j.value("project", std::string());
    opt.project_per_top_dir = j.value("project_per_top_dir", false);
    opt.parallelism = j.value("parallelism", 1u);
    if (!s.extract.project.empty()) opt.project = s.extract.project;
    if (s.extract.project_per_dir) opt.project_per_top_dir = true;
    if (s.extract.parallelism > 0) opt.parallelism = s.extract.parallelism;
    return opt;
}

std::map<std::string, CaseLabel> labels_for(const Settings& s) {
    auto path = s.labels;
    if (path.empty()) path = s.config.value("labels", std::string());
    if (path.empty()) return {};
    return read_labels(path);
}

std::vector<std::string> ignore_patterns(const Settings& s) {
    auto patterns = section(s, "scan").value("ignore", std::vector<std::string>{});
    patterns.insert(patterns.end(), s.ignore.begin(), s.ignore.end());
    return patterns;
}

ManifestTotals totals_of(const FileManifest& m) {
    return {m.root.filename().string(), m.total_files, m.python_files, m.python_loc};
}

std::vector<SkipRecord> skips_of(const FileManifest& m, const std::vector<SkipRecord>& extraction) {
    std::vector<SkipRecord> out;
    for (const auto& s : m.skipped) out.push_back({s.relative_path, s.reason});
    out.insert(out.end(), extraction.begin(), extraction.end());
    return out;
}

// ---- stages ----------------------------------------------------------------

void do_scan(const Settings& s, const fs::path& root, std::ostream& out) {
    const auto manifest = scan_repo(root, ignore_patterns(s));
    const StagePaths paths{s.out.empty() ? fs::path("out") : fs::path(s.out)};
    fs::create_directories(paths.out);
    write_json_file(paths.manifest(), manifest_to_json(manifest));
    out << "scanned " << manifest.python_files << " python files (" << manifest.python_loc << " LoC) of "
        << manifest.total_files << " files -> " << paths.manifest().string() << "\n";
}

CandidateSet extract_stage(const Settings& s, const FileManifest& manifest, const StagePaths& paths) {
    auto set = extract_corpus(manifest, catalog_for(s), extract_options(s));
    fs::create_directories(paths.out);
    write_candidates_jsonl(paths.candidates(), set.candidates);
    write_candidate_sources(paths.candidate_sources(), set.candidates);
    std::vector<Json> skipped;
    for (const auto& r : set.skipped) skipped.push_back(Json{{"file", r.file}, {"reason", r.reason}});
    write_jsonl_file(paths.out / "skipped.jsonl", skipped);
    return set;
}

void do_extract(const Settings& s, const fs::path& manifest_file, std::ostream& out) {
    const auto manifest = manifest_from_json(read_json_file(manifest_file));
    const StagePaths paths{out_dir(s, manifest_file)};
    const auto set = extract_stage(s, manifest, paths);
    out << set.candidates.size() << " candidates, " << set.skipped.size() << " files skipped -> "
        << paths.candidates().string() << "\n";
}

void write_analysis_info(const fs::path& dir, const std::string& mode, const ProviderConfig& cfg) {
    write_json_file(dir / kAnalysisInfo, Json{{"provider_mode", mode}, {"provider", provider_config_to_json(cfg)}});
}

void do_analyze(const Settings& s, const fs::path& candidates_file, std::ostream& out) {
    const auto cfg = provider_config(s);
    auto provider = make_provider(s, cfg);
    const auto candidates = read_candidates_jsonl(candidates_file);
    const StagePaths paths{out_dir(s, candidates_file)};
    fs::create_directories(paths.out);
    const auto verdicts = analyze_candidates(candidates, provider.get(), cfg);
    provider.finish();
    write_verdicts(paths.verdicts(), verdicts);
    write_analysis_info(paths.out, provider.mode, cfg);
    std::size_t yes = 0, failed = 0;
    for (const auto& v : verdicts) {
        if (const auto* a = std::get_if<AnalysisVerdict>(&v)) yes += a->vulnerable ? 1 : 0;
        else ++failed;
    }
    out << verdicts.size() << " verdicts (" << yes << " Yes, " << failed << " unparsed) -> "
        << paths.verdicts().string() << "\n";
}

void do_gen_tests(const Settings& s, const fs::path& verdicts_file, const std::string& candidates_flag,
                  std::ostream& out) {
    const auto cfg = provider_config(s);
    auto provider = make_provider(s, cfg);
    const fs::path cand_file = candidates_flag.empty() ? sibling(verdicts_file, "candidates.jsonl") : fs::path(candidates_flag);
    const auto candidates = read_candidates_jsonl(cand_file);
    const auto verdicts = read_verdicts(verdicts_file);
    const StagePaths paths{out_dir(s, verdicts_file)};
    fs::create_directories(paths.out);
    const auto tests = generate_tests(candidates, verdicts, provider.get(), cfg);
    provider.finish();
    write_testgen_records(paths.tests(), tests);
    std::size_t with_code = 0;
    for (const auto& t : tests) with_code += t.test ? 1 : 0;
    out << tests.size() << " tests requested, " << with_code << " with code -> " << paths.tests().string() << "\n";
}

void do_run_tests(const Settings& s, const fs::path& tests_file, const std::string& candidates_flag,
                  std::ostream& out) {
    const fs::path cand_file = candidates_flag.empty() ? sibling(tests_file, "candidates.jsonl") : fs::path(candidates_flag);
    const auto candidates = read_candidates_jsonl(cand_file);
    const auto tests = read_testgen_records(tests_file);
    const StagePaths paths{out_dir(s, tests_file)};
    fs::create_directories(paths.out);
    const auto records = run_tests(candidates, tests, exec_options(s, paths.tests_dir()));
    write_execution_records(paths.outcomes(), records);
    std::map<std::string, int> by_status;
    for (const auto& r : records) {
        if (r.outcome) ++by_status[std::string(to_string(r.outcome->status))];
        else ++by_status["not executed"];
    }
    out << records.size() << " tests executed:";
    for (const auto& [k, n] : by_status) out << " " << k << "=" << n;
    out << " -> " << paths.outcomes().string() << "\n";
}

struct EvaluateFiles {
    std::string candidates;
    std::string tests;
    std::string manifest;
};

RunResults evaluate_stage(const Settings& s, const fs::path& verdicts_file, const fs::path& outcomes_file,
                          const EvaluateFiles& f) {
    EvaluationInput in;
    const fs::path cand_file = f.candidates.empty() ? sibling(verdicts_file, "candidates.jsonl") : fs::path(f.candidates);
    const fs::path tests_file = f.tests.empty() ? sibling(outcomes_file, "tests.jsonl") : fs::path(f.tests);
    const fs::path manifest_file = f.manifest.empty() ? sibling(cand_file, "manifest.json") : fs::path(f.manifest);
    in.candidates = read_candidates_jsonl(cand_file);
    in.verdicts = read_verdicts(verdicts_file);
    if (fs::exists(tests_file)) in.tests = read_testgen_records(tests_file);
    in.executions = read_execution_records(outcomes_file);
    in.labels = labels_for(s);
    in.prices = provider_config(s);
    in.model_name = in.prices.model_name;
    in.provider_mode = "unknown";
    if (const auto info = sibling(verdicts_file, kAnalysisInfo); fs::exists(info)) {
        const auto j = read_json_file(info);
        in.provider_mode = j.value("provider_mode", in.provider_mode);
        // Flags and the config file take precedence over what analyze recorded.
        auto recorded = provider_config_from_json(j.value("provider", Json::object()));
        if (s.provider.model.empty() && !section(s, "provider").contains("model_name")) {
            in.model_name = recorded.model_name;
        }
        if (!in.prices.prices_configured && recorded.prices_configured) in.prices = recorded;
    }
    if (fs::exists(manifest_file)) {
        const auto manifest = manifest_from_json(read_json_file(manifest_file));
        in.manifest = totals_of(manifest);
        std::vector<SkipRecord> extraction;
        if (const auto skipped = sibling(cand_file, "skipped.jsonl"); fs::exists(skipped)) {
            for (const auto& j : read_jsonl_file(skipped)) {
                extraction.push_back({j.at("file").get<std::string>(), j.at("reason").get<std::string>()});
            }
        }
        in.skipped = skips_of(manifest, extraction);
    }
    return evaluate_run(in, catalog_for(s));
}

void print_summary(const RunResults& run, std::ostream& out) {
    const auto& t = run.counts.total;
    out << run.model_name << ": TP=" << t.tp << " FP=" << t.fp << " TN=" << t.tn << " FN=" << t.fn
        << " Invalid=" << t.invalid << " UnverifiedNegative=" << run.counts.unverified_total << "\n";
    out << "accuracy " << format_percent(run.metrics.accuracy) << ", precision " << format_percent(run.metrics.precision)
        << ", recall " << format_percent(run.metrics.recall) << ", F1 " << format_percent(run.metrics.f1) << "\n";
}

void do_evaluate(const Settings& s, const fs::path& verdicts_file, const fs::path& outcomes_file,
                 const EvaluateFiles& f, std::ostream& out) {
    const auto run = evaluate_stage(s, verdicts_file, outcomes_file, f);
    const auto dir = out_dir(s, outcomes_file);
    fs::create_directories(dir);
    write_json_file(dir / kRunFile, render_json(run));
    print_summary(run, out);
    out << "-> " << (dir / kRunFile).string() << "\n";
}

void do_baseline(const Settings& s, const fs::path& candidates_file, const std::string& outcomes_flag,
                 std::ostream& out) {
    const auto candidates = read_candidates_jsonl(candidates_file);
    const auto labels = labels_for(s);
    std::map<std::string, ExecutionOutcome> outcomes;
    const fs::path outcomes_file = outcomes_flag.empty() ? sibling(candidates_file, "outcomes.jsonl") : fs::path(outcomes_flag);
    if (fs::exists(outcomes_file)) {
        for (const auto& r : read_execution_records(outcomes_file)) {
            if (r.outcome) outcomes.emplace(r.case_id, *r.outcome);
        }
    } else if (!outcomes_flag.empty()) {
        throw Error(ErrorCode::IoError, "outcomes file not found: " + outcomes_file.string());
    }

    std::vector<BaselineFinding> findings;
    std::string source = std::string(kBaselineName);
    if (!s.external_report.empty()) {
        findings = ingest_external_report(read_json_file(s.external_report), candidates);
        source = "external:" + fs::path(s.external_report).filename().string();
    } else {
        const auto catalog = catalog_for(s);
        for (const auto& c : candidates) {
            auto f = run_rules(c, catalog);
            findings.insert(findings.end(), f.begin(), f.end());
        }
    }
    std::set<std::string> flagged;
    for (const auto& f : findings) flagged.insert(f.case_id);

    std::vector<CaseClass> classes;
    std::map<std::string, std::string> project_of;
    Json cases = Json::array();
    for (const auto& c : candidates) {
        const auto lit = labels.find(c.case_id);
        const auto oit = outcomes.find(c.case_id);
        const auto cls = classify_baseline(c.case_id, flagged.count(c.case_id) > 0,
                                           lit == labels.end() ? std::nullopt : std::optional<CaseLabel>(lit->second),
                                           oit == outcomes.end() ? std::nullopt : std::optional<ExecutionOutcome>(oit->second));
        classes.push_back(cls);
        project_of[c.case_id] = c.project;
        cases.push_back(Json{{"case_id", c.case_id}, {"class", to_string(cls.kind)}});
    }
    const auto agg = aggregate(classes, project_of);
    const auto metrics = compute_metrics(agg.total);
    Json doc;
    doc["source"] = source;
    Json jf = Json::array();
    for (const auto& f : findings) jf.push_back(finding_to_json(f));
    doc["findings"] = jf;
    doc["cases"] = cases;
    Json projects = Json::array();
    for (const auto& p : agg.projects) projects.push_back(counts_to_json(p));
    doc["counts"] = Json{{"projects", projects}, {"total", counts_to_json(agg.total)},
                         {"unverified_total", agg.unverified_total}};
    doc["metrics"] = metrics_to_json(metrics);
    const auto dir = out_dir(s, candidates_file);
    fs::create_directories(dir);
    write_json_file(dir / kBaselineFile, doc);
    const auto& t = agg.total;
    out << source << ": " << findings.size() << " findings; TP=" << t.tp << " FP=" << t.fp << " TN=" << t.tn
        << " FN=" << t.fn << " Invalid=" << t.invalid << " UnverifiedNegative=" << agg.unverified_total << "\n";
    out << "accuracy " << format_percent(metrics.accuracy) << ", precision " << format_percent(metrics.precision)
        << ", recall " << format_percent(metrics.recall) << ", F1 " << format_percent(metrics.f1) << "\n";
    out << "-> " << (dir / kBaselineFile).string() << "\n";
}

// A compare input is a run.json (its model row, plus the rule baseline when
// --with-baseline is set) or a baseline.json.
void do_compare(const Settings& s, const std::vector<std::string>& inputs, bool with_baseline, std::ostream& out) {
    std::vector<std::pair<std::string, ConfusionCounts>> runs;
    for (const auto& in : inputs) {
        const auto doc = read_json_file(in);
        if (doc.contains("format")) {
            const auto run = run_from_json(doc);
            runs.emplace_back(run.model_name, run.counts.total);
            if (with_baseline) runs.emplace_back(std::string(kBaselineName), run.baseline_counts.total);
        } else if (doc.contains("findings")) {
            runs.emplace_back(doc.at("source").get<std::string>(), counts_from_json(doc.at("counts").at("total")));
        } else {
            throw Error(ErrorCode::FormatError, in + ": neither a run nor a baseline document");
        }
    }
    const auto table = compare_models(runs, s.reference);
    const fs::path dir = s.out.empty() ? fs::path(".") : fs::path(s.out);
    fs::create_directories(dir);
    write_json_file(dir / kComparisonFile, comparison_to_json(table));
    out << "| Model | Accuracy | Precision | Recall | F1 | Δ Accuracy | Δ Precision | Δ Recall | Δ F1 |\n";
    out << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : table.rows) {
        out << "| " << r.model << " | " << format_percent(r.metrics.accuracy) << " | "
            << format_percent(r.metrics.precision) << " | " << format_percent(r.metrics.recall) << " | "
            << format_percent(r.metrics.f1) << " | " << format_delta(r.delta.accuracy) << " | "
            << format_delta(r.delta.precision) << " | " << format_delta(r.delta.recall) << " | "
            << format_delta(r.delta.f1) << " |\n";
    }
    out << "reference: " << table.reference << " -> " << (dir / kComparisonFile).string() << "\n";
}

void do_report(const Settings& s, const fs::path& run_file, std::ostream& out) {
    const auto run = run_from_json(read_json_file(run_file));
    const auto dir = out_dir(s, run_file);
    write_report(run, dir);
    out << "report written to " << dir.string() << " (run.json, summary.md, cases.csv)\n";
}

void do_pipeline(const Settings& s, const fs::path& root, std::ostream& out) {
    const StagePaths paths{s.out.empty() ? fs::path("out") : fs::path(s.out)};
    const auto cfg = provider_config(s);
    auto provider = make_provider(s, cfg);
    auto exec = exec_options(s, paths.tests_dir());

    const auto manifest = scan_repo(root, ignore_patterns(s));
    fs::create_directories(paths.out);
    write_json_file(paths.manifest(), manifest_to_json(manifest));
    out << "[1/5] scan: " << manifest.python_files << " python files, " << manifest.python_loc << " LoC\n";

    const auto set = extract_stage(s, manifest, paths);
    out << "[2/5] extract: " << set.candidates.size() << " candidates\n";

    const auto verdicts = analyze_candidates(set.candidates, provider.get(), cfg);
    write_verdicts(paths.verdicts(), verdicts);
    write_analysis_info(paths.out, provider.mode, cfg);
    out << "[3/5] analyze: " << verdicts.size() << " verdicts\n";

    const auto tests = generate_tests(set.candidates, verdicts, provider.get(), cfg);
    provider.finish();
    write_testgen_records(paths.tests(), tests);
    out << "[4/5] gen-tests: " << tests.size() << " tests\n";

    const auto records = run_tests(set.candidates, tests, exec);
    write_execution_records(paths.outcomes(), records);
    out << "[5/5] run-tests: " << records.size() << " executed\n";

    const auto run = evaluate_stage(s, paths.verdicts(), paths.outcomes(), {});
    write_report(run, paths.out);
    print_summary(run, out);
    out << "report written to " << paths.out.string() << "\n";
}

// ---- wiring ----------------------------------------------------------------

void add_provider_flags(CLI::App* cmd, Settings& s) {
    cmd->add_option("--provider", s.provider.provider, "Provider id for live requests (e.g. openai)");
    cmd->add_option("--model", s.provider.model, "Model name");
    cmd->add_option("--endpoint", s.provider.endpoint, "Chat-completions endpoint URL");
    cmd->add_option("--cassette", s.provider.cassette, "Replay responses from this cassette");
    cmd->add_flag("--record", s.provider.record, "Query the provider and append exchanges to --cassette");
}

void add_exec_flags(CLI::App* cmd, Settings& s) {
    cmd->add_option("--exec-timeout-s", s.exec.timeout_s, "Per-test wall-clock limit in seconds");
    cmd->add_option("--exec-parallelism", s.exec.parallelism, "Concurrent test executions");
    cmd->add_option("--max-fix-rounds", s.exec.max_fix_rounds, "Automatic fix attempts per test");
    cmd->add_option("--runner", s.exec.runner, "Runner command, the test path is appended");
}

void add_extract_flags(CLI::App* cmd, Settings& s) {
    cmd->add_option("--sinks", s.extract.sinks, "Sink catalog JSON (default: built-in 26 entries)");
    cmd->add_option("--project", s.extract.project, "Project name for every candidate");
    cmd->add_flag("--project-per-dir", s.extract.project_per_dir, "Treat each top-level directory as a project");
    cmd->add_option("--extract-parallelism", s.extract.parallelism, "Files parsed concurrently");
}

void load_config(Settings& s) {
    if (s.config_path.empty()) return;
    s.config = read_json_file(s.config_path);
    if (!s.config.is_object()) throw Error(ErrorCode::FormatError, "config file must hold a JSON object");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Find and confirm command injection in Python repositories"};
    app.require_subcommand(1);
    Settings s;
    app.add_option("--config", s.config_path, "JSON config file (provider, exec, scan, extract, labels)")
        ->check(CLI::ExistingFile);

    std::string root, manifest, candidates, verdicts, outcomes, tests, run_file, cand_flag, tests_flag, manifest_flag,
        outcomes_flag;
    std::vector<std::string> compare_inputs;
    bool with_baseline = false;

    auto* scan = app.add_subcommand("scan", "Step 1: walk a repository and write manifest.json");
    scan->add_option("root", root, "Repository root")->required();
    scan->add_option("-o,--out", s.out, "Output directory (default: out)");
    scan->add_option("--ignore", s.ignore, "fnmatch patterns to exclude");

    auto* extract = app.add_subcommand("extract", "Step 2: extract candidate functions");
    extract->add_option("manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
    extract->add_option("-o,--out", s.out, "Output directory (default: next to the input)");
    add_extract_flags(extract, s);

    auto* analyze = app.add_subcommand("analyze", "Step 3: ask the model about every candidate");
    analyze->add_option("candidates", candidates, "candidates.jsonl")->required()->check(CLI::ExistingFile);
    analyze->add_option("-o,--out", s.out, "Output directory (default: next to the input)");
    add_provider_flags(analyze, s);

    auto* gen = app.add_subcommand("gen-tests", "Step 4: generate a security test per Yes verdict");
    gen->add_option("verdicts", verdicts, "verdicts.jsonl")->required()->check(CLI::ExistingFile);
    gen->add_option("--candidates", cand_flag, "candidates.jsonl (default: next to the verdicts)");
    gen->add_option("-o,--out", s.out, "Output directory (default: next to the input)");
    add_provider_flags(gen, s);

    auto* runt = app.add_subcommand("run-tests", "Step 5: execute the generated tests");
    runt->add_option("tests", tests, "tests.jsonl")->required()->check(CLI::ExistingFile);
    runt->add_option("--candidates", cand_flag, "candidates.jsonl (default: next to the tests)");
    runt->add_option("-o,--out", s.out, "Output directory (default: next to the input)");
    add_exec_flags(runt, s);

    auto* eval = app.add_subcommand("evaluate", "Classify cases and compute counts, metrics and cost");
    eval->add_option("verdicts", verdicts, "verdicts.jsonl")->required()->check(CLI::ExistingFile);
    eval->add_option("outcomes", outcomes, "outcomes.jsonl")->required()->check(CLI::ExistingFile);
    eval->add_option("--labels", s.labels, "Label JSONL file")->check(CLI::ExistingFile);
    eval->add_option("--candidates", cand_flag, "candidates.jsonl (default: next to the verdicts)");
    eval->add_option("--tests", tests_flag, "tests.jsonl (default: next to the outcomes)");
    eval->add_option("--manifest", manifest_flag, "manifest.json (default: next to the candidates)");
    eval->add_option("--model", s.provider.model, "Model name shown in the report");
    eval->add_option("--sinks", s.extract.sinks, "Sink catalog JSON");
    eval->add_option("-o,--out", s.out, "Output directory (default: next to the outcomes)");

    auto* base = app.add_subcommand("baseline", "Run the rule-based baseline over candidates");
    base->add_option("candidates", candidates, "candidates.jsonl")->required()->check(CLI::ExistingFile);
    base->add_option("--labels", s.labels, "Label JSONL file")->check(CLI::ExistingFile);
    base->add_option("--outcomes", outcomes_flag, "outcomes.jsonl used as ground truth for unlabeled cases");
    base->add_option("--external-report", s.external_report, "Use an external scanner's JSON report instead of the rules")
        ->check(CLI::ExistingFile);
    base->add_option("--sinks", s.extract.sinks, "Sink catalog JSON");
    base->add_option("-o,--out", s.out, "Output directory (default: next to the input)");

    auto* cmp = app.add_subcommand("compare", "Compare runs (run.json or baseline.json files)");
    cmp->add_option("runs", compare_inputs, "Run or baseline documents")->required()->check(CLI::ExistingFile);
    cmp->add_option("--reference", s.reference, "Model the deltas are relative to (default: the last one)");
    cmp->add_flag("--with-baseline", with_baseline, "Add each run's rule-baseline row");
    cmp->add_option("-o,--out", s.out, "Output directory (default: .)");

    auto* rep = app.add_subcommand("report", "Render run.json as JSON, Markdown and CSV");
    rep->add_option("run", run_file, "run.json")->required()->check(CLI::ExistingFile);
    rep->add_option("-o,--out", s.out, "Output directory (default: next to the input)");

    auto* pipe = app.add_subcommand("pipeline", "Run all five steps and write the report");
    pipe->add_option("root", root, "Repository root")->required();
    pipe->add_option("-o,--out", s.out, "Output directory (default: out)");
    pipe->add_option("--labels", s.labels, "Label JSONL file")->check(CLI::ExistingFile);
    pipe->add_option("--ignore", s.ignore, "fnmatch patterns to exclude");
    add_provider_flags(pipe, s);
    add_exec_flags(pipe, s);
    add_extract_flags(pipe, s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        load_config(s);
        if (scan->parsed()) do_scan(s, root, out);
        else if (extract->parsed()) do_extract(s, manifest, out);
        else if (analyze->parsed()) do_analyze(s, candidates, out);
        else if (gen->parsed()) do_gen_tests(s, verdicts, cand_flag, out);
        else if (runt->parsed()) do_run_tests(s, tests, cand_flag, out);
        else if (eval->parsed()) do_evaluate(s, verdicts, outcomes, {cand_flag, tests_flag, manifest_flag}, out);
        else if (base->parsed()) do_baseline(s, candidates, outcomes_flag, out);
        else if (cmp->parsed()) do_compare(s, compare_inputs, with_baseline, out);
        else if (rep->parsed()) do_report(s, run_file, out);
        else if (pipe->parsed()) do_pipeline(s, root, out);
        return 0;
    } catch (const UsageError& e) {
        auto* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << "usage error: " << e.what() << "\n" << active->help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cmdinj
