#pragma once

// Brute-force extraction oracle for tests: regex token grep over comment- and
// string-stripped lines, intersected with indentation-derived function spans.
// Deliberately shares no code with the tokenizer/outline path it checks.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

struct HitRow {
    std::string file;
    std::string qualname;  // "<module>" outside any def
    std::string span;      // "start-end", "-" for <module>
    std::string sink;
    int line = 0;

    auto key() const { return std::tie(file, qualname, span, sink, line); }
    bool operator<(const HitRow& o) const { return key() < o.key(); }
    bool operator==(const HitRow& o) const { return key() == o.key(); }
};

inline const std::set<std::string>& catalog() {
    static const std::set<std::string> names = [] {
        std::set<std::string> s{"exec", "eval"};
        for (auto n : {"call", "run", "Popen", "check_output"}) s.insert(std::string("subprocess.") + n);
        for (auto n : {"popen", "system", "spawnl", "spawnle", "spawnlp", "spawnlpe", "spawnv", "spawnve", "spawnvp",
                       "spawnvpe", "posix_spawn", "posix_spawnp", "execl", "execle", "execlp", "execlpe", "execv",
                       "execve", "execvp", "execvpe"}) {
            s.insert(std::string("os.") + n);
        }
        return s;
    }();
    return names;
}

// Blanks string contents and drops comments, one physical line at a time.
inline std::string clean_line(const std::string& line) {
    std::string out;
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quote) {
            if (c == '\\') {
                out += "  ";
                ++i;
                continue;
            }
            if (c == quote) {
                quote = 0;
                out += c;
            } else {
                out += ' ';
            }
            continue;
        }
        if (c == '#') break;
        if (c == '"' || c == '\'') quote = c;
        out += c;
    }
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t()");
    const auto e = s.find_last_not_of(" \t()");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(trim(item));
    return parts;
}

inline int indent_of(const std::string& line) {
    int n = 0;
    while (n < static_cast<int>(line.size()) && line[static_cast<std::size_t>(n)] == ' ') ++n;
    return n;
}

inline bool blank(const std::string& cleaned) { return cleaned.find_first_not_of(" \t\r") == std::string::npos; }

struct Def {
    std::string qualname;
    int start = 0;
    int end = 0;
    bool is_function = false;
};

inline std::vector<HitRow> scan_file(const std::string& rel, const std::string& text) {
    std::vector<std::string> lines;
    {
        std::stringstream ss(text);
        std::string l;
        while (std::getline(ss, l)) lines.push_back(clean_line(l));
    }

    std::multimap<std::string, std::string> aliases;
    std::vector<std::string> stars;
    std::set<std::string> bound;
    static const std::regex import_re(R"(^\s*import\s+(.+)$)");
    static const std::regex from_re(R"(^\s*from\s+([\w.]+)\s+import\s+(.+)$)");
    static const std::regex bind_re(R"(^(?:def|class)\s+(\w+)|^(\w+)\s*=[^=])");
    for (const auto& line : lines) {
        std::smatch m;
        if (std::regex_match(line, m, import_re)) {
            for (const auto& part : split(m[1], ',')) {
                const auto as = part.find(" as ");
                if (as != std::string::npos) {
                    aliases.emplace(trim(part.substr(as + 4)), trim(part.substr(0, as)));
                } else {
                    const auto head = part.substr(0, part.find('.'));
                    aliases.emplace(head, head);
                }
            }
        } else if (std::regex_match(line, m, from_re)) {
            const std::string module = m[1];
            for (const auto& part : split(m[2], ',')) {
                if (part == "*") {
                    stars.push_back(module);
                    continue;
                }
                const auto as = part.find(" as ");
                if (as != std::string::npos) {
                    aliases.emplace(trim(part.substr(as + 4)), module + "." + trim(part.substr(0, as)));
                } else {
                    aliases.emplace(part, module + "." + part);
                }
            }
        } else if (std::regex_search(line, m, bind_re)) {
            bound.insert(m[1].matched ? m[1].str() : m[2].str());
        }
    }

    // spans from indentation
    std::vector<Def> defs;
    std::vector<std::pair<int, std::string>> stack;  // (indent, qual)
    static const std::regex def_re(R"(^(\s*)(?:async\s+)?(def|class)\s+(\w+))");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::smatch m;
        if (!std::regex_search(lines[i], m, def_re)) continue;
        const int ind = static_cast<int>(m[1].length());
        while (!stack.empty() && stack.back().first >= ind) stack.pop_back();
        const std::string qual = (stack.empty() ? std::string{} : stack.back().second + ".") + m[3].str();
        int end = static_cast<int>(i) + 1;
        for (std::size_t k = i + 1; k < lines.size(); ++k) {
            if (blank(lines[k])) continue;
            if (indent_of(lines[k]) <= ind) break;
            end = static_cast<int>(k) + 1;
        }
        defs.push_back({qual, static_cast<int>(i) + 1, end, m[2] == "def"});
        stack.emplace_back(ind, qual);
    }

    auto resolve = [&](const std::string& chain) -> std::string {
        const auto dot = chain.find('.');
        const std::string head = chain.substr(0, dot);
        const std::string rest = dot == std::string::npos ? "" : chain.substr(dot);
        auto [lo, hi] = aliases.equal_range(head);
        if (lo != hi) {
            for (auto it = lo; it != hi; ++it) {
                if (catalog().count(it->second + rest)) return it->second + rest;
            }
            return {};
        }
        if (bound.count(head)) return {};
        for (const auto& s : stars) {
            if (catalog().count(s + "." + chain)) return s + "." + chain;
        }
        if (dot == std::string::npos && (chain == "eval" || chain == "exec")) return chain;
        return {};
    };

    std::vector<HitRow> rows;
    static const std::regex call_re(R"(([A-Za-z_]\w*(?:\s*\.\s*[A-Za-z_]\w*)*)\s*\()");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        for (auto it = std::sregex_iterator(line.begin(), line.end(), call_re); it != std::sregex_iterator(); ++it) {
            const auto pos = static_cast<std::size_t>(it->position(1));
            if (pos > 0 && (line[pos - 1] == '.' || std::isalnum(static_cast<unsigned char>(line[pos - 1])) ||
                            line[pos - 1] == '_')) {
                continue;
            }
            const std::string before = line.substr(0, pos);
            if (std::regex_search(before, std::regex(R"((def|class)\s+$)"))) continue;
            std::string chain;
            for (char c : it->str(1)) {
                if (c != ' ' && c != '\t') chain += c;
            }
            const std::string sink = resolve(chain);
            if (sink.empty()) continue;
            const int lineno = static_cast<int>(i) + 1;
            const Def* inner = nullptr;
            for (const auto& d : defs) {
                if (d.is_function && d.start <= lineno && lineno <= d.end && (!inner || d.start > inner->start)) {
                    inner = &d;
                }
            }
            if (inner) {
                rows.push_back({rel, inner->qualname, std::to_string(inner->start) + "-" + std::to_string(inner->end),
                                sink, lineno});
            } else {
                rows.push_back({rel, "<module>", "-", sink, lineno});
            }
        }
    }
    return rows;
}

inline std::vector<HitRow> scan_tree(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() == ".py") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<HitRow> rows;
    for (const auto& f : files) {
        std::ifstream in(f);
        std::stringstream ss;
        ss << in.rdbuf();
        for (auto& r : scan_file(std::filesystem::relative(f, root).generic_string(), ss.str())) rows.push_back(r);
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

inline std::vector<HitRow> read_frozen_table(const std::filesystem::path& tsv) {
    std::vector<HitRow> rows;
    std::ifstream in(tsv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = [&] {
            std::vector<std::string> c;
            std::stringstream ss(line);
            std::string item;
            while (std::getline(ss, item, '\t')) c.push_back(item);
            return c;
        }();
        const std::string span = cols[2] == "-" ? "-" : cols[2] + "-" + cols[3];
        rows.push_back({cols[0], cols[1], span, cols[4], std::stoi(cols[5])});
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

}  // namespace oracle
