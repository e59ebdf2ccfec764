#include "cmdinj/extractor.hpp"

#include <algorithm>
#include <set>

#include "cmdinj/digest.hpp"
#include "cmdinj/error.hpp"
#include "cmdinj/parallel.hpp"

namespace cmdinj {

using python::ArgOrigin;
using python::ArgShape;

namespace {

std::vector<std::size_t> line_starts(std::string_view source) {
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source[i] == '\n') starts.push_back(i + 1);
    }
    return starts;
}

// Byte slice covering whole lines [first, last] (1-based, inclusive).
std::string line_slice(std::string_view source, const std::vector<std::size_t>& starts, int first, int last) {
    const auto b = starts[static_cast<std::size_t>(first - 1)];
    const auto e = static_cast<std::size_t>(last) < starts.size() ? starts[static_cast<std::size_t>(last)]
                                                                 : source.size();
    return std::string(source.substr(b, e - b));
}

ImportMap to_import_map(const python::ModuleOutline& outline) {
    ImportMap map;
    for (const auto& b : outline.imports) map.emplace(b.local, b.target);
    return map;
}

// Resolves a dotted callee as written to a catalog entry, honouring import
// aliases, star imports and builtin lookup.
std::optional<std::string> resolve_callee(const std::string& chain, const ImportMap& imports,
                                          const python::ModuleOutline& outline, const SinkCatalog& catalog) {
    const auto dot = chain.find('.');
    const std::string head = chain.substr(0, dot);
    const std::string rest = dot == std::string::npos ? std::string{} : chain.substr(dot);

    const auto normalize = [](std::string name) {
        if (name.starts_with("builtins.")) name.erase(0, 9);
        return name;
    };

    const auto [lo, hi] = imports.equal_range(head);
    if (lo != hi) {
        for (auto it = lo; it != hi; ++it) {
            const std::string qualified = normalize(it->second + rest);
            if (catalog.contains(qualified)) return qualified;
        }
        return std::nullopt;
    }
    if (outline.module_bindings.count(head)) return std::nullopt;
    for (const auto& module : outline.star_imports) {
        const std::string qualified = module + "." + chain;
        if (catalog.contains(qualified)) return qualified;
    }
    if (dot == std::string::npos) {
        const auto* entry = catalog.find(chain);
        if (entry && entry->group == SinkGroup::Builtin) return chain;
    }
    return std::nullopt;
}

SinkHit make_hit(const python::CallSite& call, const std::string& sink, const SinkCatalog& catalog) {
    SinkHit hit;
    hit.sink = sink;
    hit.line = call.line;
    hit.arg_shape = call.command_shape == ArgShape::Missing ? ArgShape::Other : call.command_shape;
    const auto* entry = catalog.find(sink);
    const bool subprocess = entry && entry->group == SinkGroup::Subprocess;
    if (hit.arg_shape == ArgShape::ListLiteral && !subprocess && !is_argv_family(sink)) hit.arg_shape = ArgShape::Other;
    hit.shell_true = subprocess && call.shell_true_literal;
    if (hit.arg_shape == ArgShape::NameRef) {
        hit.arg_name = call.command_name;
        hit.arg_origin = call.command_origin;
    }
    return hit;
}

}  // namespace

const CandidateFunction* CandidateSet::find(std::string_view case_id) const {
    const auto it = std::find_if(candidates.begin(), candidates.end(),
                                 [&](const CandidateFunction& c) { return c.case_id == case_id; });
    return it == candidates.end() ? nullptr : &*it;
}

ImportMap resolve_imports(std::string_view file_source) {
    return to_import_map(python::outline_module(file_source));
}

std::string make_case_id(const std::string& project, const std::string& file, const std::string& qualname,
                         int start_line) {
    return project + ":" + file + ":" + qualname + ":" + std::to_string(start_line);
}

std::string case_slug(std::string_view case_id) {
    std::string slug;
    for (char c : case_id) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                          c == '-' || c == '_';
        slug.push_back(keep ? c : '_');
    }
    return slug + "-" + sha256_hex(case_id).substr(0, 8);
}

FileExtraction extract_candidates(std::string_view source, const SourceFileRecord& file, const SinkCatalog& catalog,
                                  const std::string& project) {
    FileExtraction result;
    python::ModuleOutline outline;
    try {
        outline = python::outline_module(source);
    } catch (const Error& e) {
        result.skipped = SkipRecord{file.relative_path, e.what()};
        return result;
    }
    const ImportMap imports = to_import_map(outline);
    const auto starts = line_starts(source);

    // scope index -> hits, with -1 collecting module-level calls
    std::map<int, std::vector<std::pair<const python::CallSite*, SinkHit>>> by_scope;
    for (const auto& call : outline.calls) {
        if (auto sink = resolve_callee(call.callee, imports, outline, catalog)) {
            by_scope[call.scope].emplace_back(&call, make_hit(call, *sink, catalog));
        }
    }

    for (auto& [scope, hits] : by_scope) {
        CandidateFunction c;
        c.project = project;
        c.file = file.relative_path;
        if (scope >= 0) {
            const auto& fn = outline.functions[static_cast<std::size_t>(scope)];
            c.function_name = fn.name;
            c.qualname = fn.qualname;
            c.start_line = fn.def_line;
            c.end_line = fn.end_line;
        } else {
            c.function_name = std::string(kModuleFunctionName);
            c.qualname = c.function_name;
            c.start_line = hits.front().first->stmt_start_line;
            c.end_line = hits.front().first->stmt_end_line;
            for (const auto& [call, hit] : hits) {
                c.start_line = std::min(c.start_line, call->stmt_start_line);
                c.end_line = std::max(c.end_line, call->stmt_end_line);
            }
        }
        c.loc = c.end_line - c.start_line + 1;
        for (auto& [call, hit] : hits) c.matched_sinks.push_back(std::move(hit));
        std::stable_sort(c.matched_sinks.begin(), c.matched_sinks.end(),
                         [](const SinkHit& a, const SinkHit& b) { return a.line < b.line; });
        c.source_text = line_slice(source, starts, c.start_line, c.end_line);
        c.case_id = make_case_id(c.project, c.file, c.qualname, c.start_line);
        result.candidates.push_back(std::move(c));
    }
    std::sort(result.candidates.begin(), result.candidates.end(), [](const auto& a, const auto& b) {
        return std::tie(a.start_line, a.qualname) < std::tie(b.start_line, b.qualname);
    });
    return result;
}

CandidateSet extract_corpus(const FileManifest& manifest, const SinkCatalog& catalog, const ExtractOptions& options) {
    std::string fallback = options.project;
    if (fallback.empty()) {
        auto root = std::filesystem::absolute(manifest.root).lexically_normal();
        if (root.filename().empty()) root = root.parent_path();
        fallback = root.filename().string();
    }

    std::vector<FileExtraction> per_file(manifest.files.size());
    parallel_for(manifest.files.size(), options.parallelism, [&](std::size_t i) {
        const auto& rec = manifest.files[i];
        std::string project = fallback;
        if (options.project_per_top_dir) {
            const auto slash = rec.relative_path.find('/');
            if (slash != std::string::npos) project = rec.relative_path.substr(0, slash);
        }
        std::string source;
        try {
            source = read_file(manifest.root / rec.relative_path);
        } catch (const Error& e) {
            per_file[i].skipped = SkipRecord{rec.relative_path, e.what()};
            return;
        }
        if (sha256_hex(source) != rec.content_digest) {
            per_file[i].skipped = SkipRecord{rec.relative_path, "content changed since scan"};
            return;
        }
        per_file[i] = extract_candidates(source, rec, catalog, project);
    });

    CandidateSet set;
    for (auto& fe : per_file) {
        for (auto& c : fe.candidates) set.candidates.push_back(std::move(c));
        if (fe.skipped) set.skipped.push_back(std::move(*fe.skipped));
    }
    return set;
}

std::string_view to_string(BlindspotReason reason) {
    return reason == BlindspotReason::ListArgument ? "list_argument" : "external_binding";
}

std::vector<BlindspotFlag> flag_blindspots(const CandidateSet& set, const SinkCatalog& catalog) {
    std::vector<BlindspotFlag> flags;
    for (const auto& c : set.candidates) {
        bool list_arg = false;
        bool external = false;
        for (const auto& hit : c.matched_sinks) {
            const auto* entry = catalog.find(hit.sink);
            if (!entry) continue;
            if (entry->group == SinkGroup::Subprocess &&
                (hit.arg_shape == ArgShape::ListLiteral ||
                 (hit.arg_shape == ArgShape::NameRef && hit.arg_origin == ArgOrigin::ListParameter))) {
                list_arg = true;
            }
            if (entry->group == SinkGroup::Builtin && hit.arg_shape == ArgShape::NameRef &&
                (hit.arg_origin == ArgOrigin::Parameter || hit.arg_origin == ArgOrigin::ListParameter ||
                 hit.arg_origin == ArgOrigin::ModuleGlobal)) {
                external = true;
            }
        }
        if (list_arg) flags.push_back({c.case_id, BlindspotReason::ListArgument});
        if (external) flags.push_back({c.case_id, BlindspotReason::ExternalBinding});
    }
    return flags;
}

Json candidate_to_json(const CandidateFunction& c) {
    Json sinks = Json::array();
    for (const auto& h : c.matched_sinks) {
        Json hit{{"name", h.sink},
                 {"line", h.line},
                 {"arg_shape", python::to_string(h.arg_shape)},
                 {"shell_true", h.shell_true}};
        if (h.arg_shape == ArgShape::NameRef) {
            hit["arg_name"] = h.arg_name;
            hit["arg_origin"] = python::to_string(h.arg_origin);
        }
        sinks.push_back(std::move(hit));
    }
    return Json{{"case_id", c.case_id},
                {"project", c.project},
                {"file", c.file},
                {"function", c.function_name},
                {"qualname", c.qualname},
                {"span", {c.start_line, c.end_line}},
                {"loc", c.loc},
                {"sinks", std::move(sinks)},
                {"source", c.source_text}};
}

CandidateFunction candidate_from_json(const Json& j) {
    try {
        CandidateFunction c;
        c.case_id = j.at("case_id").get<std::string>();
        c.project = j.at("project").get<std::string>();
        c.file = j.at("file").get<std::string>();
        c.function_name = j.at("function").get<std::string>();
        c.qualname = j.value("qualname", c.function_name);
        c.start_line = j.at("span").at(0).get<int>();
        c.end_line = j.at("span").at(1).get<int>();
        c.loc = j.at("loc").get<int>();
        c.source_text = j.at("source").get<std::string>();
        for (const auto& s : j.at("sinks")) {
            SinkHit h;
            h.sink = s.at("name").get<std::string>();
            h.line = s.at("line").get<int>();
            h.arg_shape = python::arg_shape_from_string(s.at("arg_shape").get<std::string>()).value_or(ArgShape::Other);
            h.shell_true = s.at("shell_true").get<bool>();
            if (s.contains("arg_name")) h.arg_name = s["arg_name"].get<std::string>();
            if (s.contains("arg_origin")) {
                h.arg_origin = python::arg_origin_from_string(s["arg_origin"].get<std::string>())
                                   .value_or(ArgOrigin::Unknown);
            }
            c.matched_sinks.push_back(std::move(h));
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("candidate: ") + e.what());
    }
}

std::vector<CandidateFunction> read_candidates_jsonl(const std::filesystem::path& path) {
    std::vector<CandidateFunction> out;
    for (const auto& row : read_jsonl_file(path)) out.push_back(candidate_from_json(row));
    return out;
}

void write_candidates_jsonl(const std::filesystem::path& path, const std::vector<CandidateFunction>& candidates) {
    std::vector<Json> rows;
    rows.reserve(candidates.size());
    for (const auto& c : candidates) rows.push_back(candidate_to_json(c));
    write_jsonl_file(path, rows);
}

void write_candidate_sources(const std::filesystem::path& dir, const std::vector<CandidateFunction>& candidates) {
    std::filesystem::create_directories(dir);
    for (const auto& c : candidates) write_file(dir / (case_slug(c.case_id) + ".py"), c.source_text);
}

}  // namespace cmdinj
