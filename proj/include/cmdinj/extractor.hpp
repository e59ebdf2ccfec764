#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmdinj/corpus.hpp"
#include "cmdinj/json_io.hpp"
#include "cmdinj/python_outline.hpp"
#include "cmdinj/sinks.hpp"

namespace cmdinj {

inline constexpr std::string_view kModuleFunctionName = "<module>";

struct SinkHit {
    std::string sink;  // catalog qualified name
    int line = 0;
    python::ArgShape arg_shape = python::ArgShape::Other;
    bool shell_true = false;
    python::ArgOrigin arg_origin = python::ArgOrigin::NotAName;
    std::string arg_name;

    bool operator==(const SinkHit&) const = default;
};

struct CandidateFunction {
    std::string case_id;
    std::string project;
    std::string file;           // relative to the manifest root
    std::string function_name;  // bare def name, or "<module>"
    std::string qualname;       // Class.method / outer.inner
    int start_line = 0;
    int end_line = 0;
    int loc = 0;
    std::vector<SinkHit> matched_sinks;
    std::string source_text;    // exact byte slice of the original file

    bool is_module_level() const { return function_name == kModuleFunctionName; }
    bool operator==(const CandidateFunction&) const = default;
};

struct SkipRecord {
    std::string file;
    std::string reason;

    bool operator==(const SkipRecord&) const = default;
};

struct CandidateSet {
    std::vector<CandidateFunction> candidates;
    std::vector<SkipRecord> skipped;

    const CandidateFunction* find(std::string_view case_id) const;
};

/// Local name -> fully qualified origin. A name may be bound more than once
/// (try/except import fallbacks), so every binding is kept.
using ImportMap = std::multimap<std::string, std::string>;

/// Throws Error{SyntaxError} when the file does not tokenize.
ImportMap resolve_imports(std::string_view file_source);

struct FileExtraction {
    std::vector<CandidateFunction> candidates;
    std::optional<SkipRecord> skipped;
};

/// Extracts every function (methods and nested functions included, hits
/// attributed to the innermost def) that calls at least one catalog sink.
/// Sink calls outside any def form one synthetic "<module>" candidate.
FileExtraction extract_candidates(std::string_view source, const SourceFileRecord& file, const SinkCatalog& catalog,
                                  const std::string& project);

struct ExtractOptions {
    std::string project;               // defaults to the manifest root's directory name
    bool project_per_top_dir = false;  // each top-level directory is its own project
    unsigned parallelism = 1;
};

CandidateSet extract_corpus(const FileManifest& manifest, const SinkCatalog& catalog, const ExtractOptions& options = {});

enum class BlindspotReason { ListArgument, ExternalBinding };
std::string_view to_string(BlindspotReason reason);

struct BlindspotFlag {
    std::string case_id;
    BlindspotReason reason;

    bool operator==(const BlindspotFlag&) const = default;
};

/// Flags the sink usages that LLM triage tends to wave through: subprocess
/// calls over a list argument, and eval/exec over a parameter or module global.
std::vector<BlindspotFlag> flag_blindspots(const CandidateSet& set, const SinkCatalog& catalog);

std::string make_case_id(const std::string& project, const std::string& file, const std::string& qualname,
                         int start_line);

/// Filesystem-safe, collision-resistant directory/file stem for a case id.
std::string case_slug(std::string_view case_id);

Json candidate_to_json(const CandidateFunction& c);
CandidateFunction candidate_from_json(const Json& j);

std::vector<CandidateFunction> read_candidates_jsonl(const std::filesystem::path& path);
void write_candidates_jsonl(const std::filesystem::path& path, const std::vector<CandidateFunction>& candidates);

/// Writes each candidate's source_text to `<dir>/<case_slug>.py`.
void write_candidate_sources(const std::filesystem::path& dir, const std::vector<CandidateFunction>& candidates);

}  // namespace cmdinj
