#include "cmdinj/testgen.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>
#include <sstream>

#include "cmdinj/error.hpp"
#include "cmdinj/python_outline.hpp"
#include "cmdinj/sandbox.hpp"

namespace cmdinj {

namespace fs = std::filesystem;

namespace {

const std::set<std::string, std::less<>>& stdlib_modules() {
    static const std::set<std::string, std::less<>> names{
    "abc", "aifc", "antigravity", "argparse", "array", "ast", "asynchat", "asyncio", "asyncore", "atexit", "audioop",
    "base64", "bdb", "binascii", "binhex", "bisect", "builtins", "bz2", "cProfile", "calendar", "cgi", "cgitb",
    "chunk", "cmath", "cmd", "code", "codecs", "codeop", "collections", "colorsys", "compileall", "concurrent",
    "configparser", "contextlib", "contextvars", "copy", "copyreg", "crypt", "csv", "ctypes", "curses",
    "dataclasses", "datetime", "dbm", "decimal", "difflib", "dis", "distutils", "doctest", "email", "encodings",
    "ensurepip", "enum", "errno", "faulthandler", "fcntl", "filecmp", "fileinput", "fnmatch", "fractions", "ftplib",
    "functools", "gc", "genericpath", "getopt", "getpass", "gettext", "glob", "graphlib", "grp", "gzip", "hashlib",
    "heapq", "hmac", "html", "http", "idlelib", "imaplib", "imghdr", "imp", "importlib", "inspect", "io",
    "ipaddress", "itertools", "json", "keyword", "lib2to3", "linecache", "locale", "logging", "lzma", "mailbox",
    "mailcap", "marshal", "math", "mimetypes", "mmap", "modulefinder", "msilib", "msvcrt", "multiprocessing",
    "netrc", "nis", "nntplib", "nt", "ntpath", "nturl2path", "numbers", "opcode", "operator", "optparse", "os",
    "ossaudiodev", "pathlib", "pdb", "pickle", "pickletools", "pipes", "pkgutil", "platform", "plistlib", "poplib",
    "posix", "posixpath", "pprint", "profile", "pstats", "pty", "pwd", "py_compile", "pyclbr", "pydoc", "pydoc_data",
    "pyexpat", "queue", "quopri", "random", "re", "readline", "reprlib", "resource", "rlcompleter", "runpy", "sched",
    "secrets", "select", "selectors", "shelve", "shlex", "shutil", "signal", "site", "smtpd", "smtplib", "sndhdr",
    "socket", "socketserver", "spwd", "sqlite3", "sre_compile", "sre_constants", "sre_parse", "ssl", "stat",
    "statistics", "string", "stringprep", "struct", "subprocess", "sunau", "symtable", "sys", "sysconfig", "syslog",
    "tabnanny", "tarfile", "telnetlib", "tempfile", "termios", "textwrap", "this", "threading", "time", "timeit",
    "tkinter", "token", "tokenize", "trace", "traceback", "tracemalloc", "tty", "turtle", "turtledemo", "types",
    "typing", "unicodedata", "unittest", "urllib", "uu", "uuid", "venv", "warnings", "wave", "weakref", "webbrowser",
    "winreg", "winsound", "wsgiref", "xdrlib", "xml", "xmlrpc", "zipapp", "zipfile", "zipimport", "zlib", "zoneinfo",
    };
    return names;
}

std::vector<std::string> lines_of(const std::string& code) {
    std::vector<std::string> lines;
    std::stringstream ss(code);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

std::string regex_escape(const std::string& s) {
    static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
    return std::regex_replace(s, special, R"(\$&)");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t()");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t()\r");
    return s.substr(b, e - b + 1);
}

std::string top_level(const std::string& dotted) { return dotted.substr(0, dotted.find('.')); }

// Index just past the leading shebang/encoding comments and __future__ imports.
std::size_t header_end(const std::vector<std::string>& lines) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].rfind("#!", 0) == 0 || lines[i].rfind("# -*-", 0) == 0) {
            pos = i + 1;
        } else if (lines[i].rfind("from __future__ import", 0) == 0) {
            pos = i + 1;
        }
    }
    return pos;
}

// Index just past the last top-level import statement.
std::size_t after_imports(const std::vector<std::string>& lines) {
    std::size_t pos = header_end(lines);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (l.rfind("import ", 0) != 0 && l.rfind("from ", 0) != 0) continue;
        std::size_t end = i;
        if (l.find('(') != std::string::npos && l.find(')') == std::string::npos) {
            while (end + 1 < lines.size() && lines[end].find(')') == std::string::npos) ++end;
        }
        pos = end + 1;
    }
    return pos;
}

bool is_system_path(const std::string& p) {
    static const std::array<std::string_view, 11> roots{"/bin", "/sbin", "/usr", "/etc", "/dev", "/proc",
                                                        "/sys", "/lib", "/lib64", "/run", "/var/run"};
    if (p == "/") return true;
    for (const auto r : roots) {
        if (p.size() >= r.size() && p.compare(0, r.size(), r) == 0 && (p.size() == r.size() || p[r.size()] == '/')) {
            return true;
        }
    }
    return false;
}

// Removes `name` from `from M import ...` lines whose module is not stdlib.
bool drop_candidate_imports(std::vector<std::string>& lines, const std::string& name) {
    static const std::regex from_re(R"(^(\s*)from\s+([\w.]+)\s+import\s+(.+)$)");
    bool changed = false;
    for (auto it = lines.begin(); it != lines.end();) {
        std::smatch m;
        if (!std::regex_match(*it, m, from_re) || is_stdlib_module(top_level(m[2].str()))) {
            ++it;
            continue;
        }
        std::vector<std::string> kept;
        bool hit = false;
        std::stringstream ss(m[3].str());
        std::string part;
        while (std::getline(ss, part, ',')) {
            const auto p = trim(part);
            if (p.empty()) continue;
            if (p == name) {
                hit = true;
            } else {
                kept.push_back(p);
            }
        }
        if (!hit) {
            ++it;
            continue;
        }
        changed = true;
        if (kept.empty()) {
            it = lines.erase(it);
            continue;
        }
        std::string rebuilt = m[1].str() + "from " + m[2].str() + " import ";
        for (std::size_t k = 0; k < kept.size(); ++k) rebuilt += (k ? ", " : "") + kept[k];
        *it = rebuilt;
        ++it;
    }
    return changed;
}

// `mod.fn(` where `mod` is a non-stdlib module the test imports: call fn directly.
bool unqualify_module_calls(std::vector<std::string>& lines, const std::string& name) {
    bool changed = false;
    static const std::regex import_re(R"(^\s*import\s+([\w.]+)\s*$)");
    std::set<std::string> dropped;
    for (auto it = lines.begin(); it != lines.end();) {
        std::smatch m;
        if (std::regex_match(*it, m, import_re) && !is_stdlib_module(top_level(m[1].str()))) {
            const std::regex call("(^|[^\\w.])" + regex_escape(m[1].str()) + "\\." + regex_escape(name) + "\\s*\\(");
            bool used = false;
            for (const auto& l : lines) used = used || std::regex_search(l, call);
            if (used) {
                dropped.insert(m[1].str());
                it = lines.erase(it);
                changed = true;
                continue;
            }
        }
        ++it;
    }
    for (const auto& mod : dropped) {
        const std::regex call("(^|[^\\w.])" + regex_escape(mod) + "\\." + regex_escape(name) + "(\\s*\\()");
        for (auto& l : lines) l = std::regex_replace(l, call, "$1" + name + "$2");
    }
    return changed;
}

bool has_import_of(const std::vector<std::string>& lines, const std::string& module) {
    const std::regex plain("^\\s*import\\s+(.*,\\s*)?" + regex_escape(module) + "\\s*(,.*)?$");
    const std::regex alias("^\\s*(import|from)\\s.*\\bas\\s+" + regex_escape(module) + "\\b");
    const std::regex from_name("^\\s*from\\s+\\S+\\s+import\\s+(.*[,(\\s])?" + regex_escape(module) + "\\s*(,.*|\\).*)?$");
    for (const auto& l : lines) {
        if (std::regex_match(l, plain) || std::regex_search(l, alias) || std::regex_match(l, from_name)) return true;
    }
    return false;
}

bool rewrite_absolute_paths(std::vector<std::string>& lines) {
    static const std::regex literal(R"('[^'\n]*'|"[^"\n]*")");
    static const std::regex abs_path(R"((^|[\s=:;|&<>'"(])(/[\w.\-/]+))");
    bool changed = false;
    for (auto& line : lines) {
        std::string out;
        auto begin = std::sregex_iterator(line.begin(), line.end(), literal);
        std::size_t last = 0;
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            const auto pos = static_cast<std::size_t>(it->position());
            out += line.substr(last, pos - last);
            std::string lit = it->str();
            std::string rebuilt;
            std::size_t lp = 0;
            for (auto pm = std::sregex_iterator(lit.begin(), lit.end(), abs_path); pm != std::sregex_iterator(); ++pm) {
                const std::string path = (*pm)[2];
                const auto ppos = static_cast<std::size_t>(pm->position(2));
                rebuilt += lit.substr(lp, ppos - lp);
                if (is_system_path(path)) {
                    rebuilt += path;
                } else {
                    auto base = fs::path(path).filename().string();
                    if (base.empty()) base = fs::path(path).parent_path().filename().string();
                    rebuilt += base.empty() ? "." : base;
                    changed = true;
                }
                lp = ppos + path.size();
            }
            rebuilt += lit.substr(lp);
            out += rebuilt;
            last = pos + lit.size();
        }
        out += line.substr(last);
        line = out;
    }
    return changed;
}

}  // namespace

std::string_view to_string(FixKind kind) {
    switch (kind) {
        case FixKind::AddedImport: return "added_import";
        case FixKind::RewrotePath: return "rewrote_path";
        case FixKind::InlinedSourceFunction: return "inlined_source_function";
        case FixKind::None: return "none";
    }
    return "none";
}

std::optional<FixKind> fix_kind_from_string(std::string_view s) {
    if (s == "added_import") return FixKind::AddedImport;
    if (s == "rewrote_path") return FixKind::RewrotePath;
    if (s == "inlined_source_function") return FixKind::InlinedSourceFunction;
    if (s == "none") return FixKind::None;
    return std::nullopt;
}

bool is_stdlib_module(std::string_view name) { return stdlib_modules().count(name) > 0; }

std::vector<std::string> imported_modules(std::string_view code) {
    static const std::regex import_re(R"(^\s*import\s+(.+)$)");
    static const std::regex from_re(R"(^\s*from\s+([\w.]+)\s+import\b)");
    std::vector<std::string> mods;
    for (const auto& line : lines_of(std::string(code))) {
        std::smatch m;
        if (std::regex_match(line, m, import_re)) {
            std::stringstream ss(m[1].str());
            std::string part;
            while (std::getline(ss, part, ',')) {
                auto p = trim(part);
                p = p.substr(0, p.find(' '));
                if (!p.empty()) mods.push_back(top_level(p));
            }
        } else if (std::regex_search(line, m, from_re)) {
            const auto mod = m[1].str();
            if (mod[0] != '.') mods.push_back(top_level(mod));
        }
    }
    return mods;
}

std::string sentinel_contents() { return "sentinel: the injected command should delete this file\n"; }

fs::path materialize(const SecurityTest& test, const fs::path& workdir) {
    if (test.normalized_code.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::NoCodeFound, "empty test for " + test.case_id);
    }
    std::error_code ec;
    if (!fs::is_directory(workdir, ec)) throw Error(ErrorCode::WorkspaceError, "workdir missing: " + workdir.string());
    if (!fs::is_empty(workdir, ec)) throw Error(ErrorCode::WorkspaceError, "workdir not empty: " + workdir.string());
    const auto path = workdir / kTestFileName;
    write_file(path, test.normalized_code);
    write_file(workdir / kSentinelFileName, sentinel_contents());
    return path;
}

SecurityTest auto_fix(const SecurityTest& test, const CandidateFunction& candidate, const ExecutionOutcome& evidence) {
    SecurityTest out = test;
    if (evidence.status != OutcomeStatus::Invalid) {
        if (!out.directly_runnable) out.directly_runnable = out.applied_fixes.empty();
        return out;
    }
    const std::string errors = evidence.stderr_excerpt + "\n" + evidence.stdout_excerpt;
    auto lines = lines_of(out.normalized_code);
    std::vector<FixKind> applied;

    // 1. the function under test must be present in the test module itself
    if (!candidate.is_module_level()) {
        const auto& fn = candidate.function_name;
        const std::regex def_re("^\\s*(async\\s+)?def\\s+" + regex_escape(fn) + "\\s*\\(");
        bool changed = unqualify_module_calls(lines, fn);
        changed = drop_candidate_imports(lines, fn) || changed;
        const std::regex ref_re("(^|[^\\w.])" + regex_escape(fn) + "\\s*\\(");
        bool defined = false;
        bool referenced = false;
        for (const auto& l : lines) {
            if (std::regex_search(l, def_re)) {
                defined = true;
            } else if (std::regex_search(l, ref_re)) {
                referenced = true;
            }
        }
        const bool imported = has_import_of(lines, fn);
        if (referenced && !defined && !imported) {
            auto src = lines_of(python::dedent(candidate.source_text));
            std::vector<std::string> block{""};
            block.insert(block.end(), src.begin(), src.end());
            block.insert(block.end(), {"", ""});
            lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(after_imports(lines)), block.begin(), block.end());
            changed = true;
        }
        if (changed) applied.push_back(FixKind::InlinedSourceFunction);
    }

    // a third-party dependency that is still imported cannot be fixed here
    static const std::regex missing_mod(R"(No module named '([\w.]+)')");
    for (auto it = std::sregex_iterator(errors.begin(), errors.end(), missing_mod); it != std::sregex_iterator(); ++it) {
        const auto mod = top_level((*it)[1].str());
        if (is_stdlib_module(mod)) continue;
        const auto mods = imported_modules(join_lines(lines));
        if (std::find(mods.begin(), mods.end(), mod) != mods.end()) {
            throw Error(ErrorCode::UnfixableTest, "test depends on unavailable module '" + mod + "'");
        }
    }

    // 2. missing standard-library imports
    static const std::regex name_error(R"(NameError: name '(\w+)' is not defined)");
    std::set<std::string> added;
    for (auto it = std::sregex_iterator(errors.begin(), errors.end(), name_error); it != std::sregex_iterator(); ++it) {
        const auto name = (*it)[1].str();
        if (!is_stdlib_module(name) || added.count(name) || has_import_of(lines, name)) continue;
        lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(header_end(lines)), "import " + name);
        added.insert(name);
    }
    if (!added.empty()) applied.push_back(FixKind::AddedImport);

    // 3. absolute paths outside the workdir
    const bool path_failure = evidence.error_kind == std::optional<std::string>("path_error") ||
                              error_kind_for(evidence.error_detail) == "path_error" ||
                              errors.find("FileNotFoundError") != std::string::npos ||
                              errors.find("PermissionError") != std::string::npos;
    if (path_failure && rewrite_absolute_paths(lines)) applied.push_back(FixKind::RewrotePath);

    if (applied.empty()) {
        if (out.applied_fixes.empty()) {
            std::string why = evidence.error_kind.value_or("unknown failure");
            if (!evidence.error_detail.empty()) why += " (" + evidence.error_detail + ")";
            throw Error(ErrorCode::UnfixableTest, "no automatic fix for " + why);
        }
        return out;
    }
    out.normalized_code = join_lines(lines);
    out.applied_fixes.insert(out.applied_fixes.end(), applied.begin(), applied.end());
    out.directly_runnable = false;
    return out;
}

Json security_test_to_json(const SecurityTest& t) {
    Json j;
    j["case_id"] = t.case_id;
    j["original_code"] = t.original_code;
    j["normalized_code"] = t.normalized_code;
    j["directly_runnable"] = t.directly_runnable ? Json(*t.directly_runnable) : Json(nullptr);
    Json fixes = Json::array();
    for (auto f : t.applied_fixes) fixes.push_back(to_string(f));
    j["applied_fixes"] = fixes;
    j["extraction_method"] = t.extraction_method;
    j["warnings"] = t.warnings;
    return j;
}

SecurityTest security_test_from_json(const Json& j) {
    try {
        SecurityTest t;
        t.case_id = j.at("case_id").get<std::string>();
        t.original_code = j.at("original_code").get<std::string>();
        t.normalized_code = j.at("normalized_code").get<std::string>();
        if (!j.at("directly_runnable").is_null()) t.directly_runnable = j.at("directly_runnable").get<bool>();
        for (const auto& f : j.at("applied_fixes")) {
            const auto k = fix_kind_from_string(f.get<std::string>());
            if (!k) throw Error(ErrorCode::FormatError, "unknown fix kind");
            t.applied_fixes.push_back(*k);
        }
        t.extraction_method = j.at("extraction_method").get<std::string>();
        t.warnings = j.at("warnings").get<std::vector<std::string>>();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("security test record: ") + e.what());
    }
}

}  // namespace cmdinj
