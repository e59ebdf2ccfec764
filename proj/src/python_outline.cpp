#include "cmdinj/python_outline.hpp"

#include <algorithm>
#include <regex>

#include "cmdinj/python_lexer.hpp"

namespace cmdinj::python {

std::string_view to_string(ArgShape shape) {
    switch (shape) {
        case ArgShape::StringLiteral: return "string_literal";
        case ArgShape::FormattedString: return "formatted_string";
        case ArgShape::NameRef: return "name_ref";
        case ArgShape::ListLiteral: return "list_literal";
        case ArgShape::Other: return "other";
        case ArgShape::Missing: return "missing";
    }
    return "other";
}

std::string_view to_string(ArgOrigin origin) {
    switch (origin) {
        case ArgOrigin::NotAName: return "not_a_name";
        case ArgOrigin::Local: return "local";
        case ArgOrigin::Parameter: return "parameter";
        case ArgOrigin::ListParameter: return "list_parameter";
        case ArgOrigin::ModuleGlobal: return "module_global";
        case ArgOrigin::Unknown: return "unknown";
    }
    return "unknown";
}

std::optional<ArgShape> arg_shape_from_string(std::string_view s) {
    for (auto v : {ArgShape::StringLiteral, ArgShape::FormattedString, ArgShape::NameRef, ArgShape::ListLiteral,
                   ArgShape::Other, ArgShape::Missing}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

std::optional<ArgOrigin> arg_origin_from_string(std::string_view s) {
    for (auto v : {ArgOrigin::NotAName, ArgOrigin::Local, ArgOrigin::Parameter, ArgOrigin::ListParameter,
                   ArgOrigin::ModuleGlobal, ArgOrigin::Unknown}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

namespace {

// Keyword names that can carry the command when no positional argument is given.
constexpr std::string_view kCommandKeywords[] = {"args", "cmd", "command", "source", "path", "file", "argv"};

bool is_list_annotation(std::string_view annotation) {
    static const std::regex kListType(R"(\b(List|list|Sequence|MutableSequence|Tuple|tuple|Iterable)\b)");
    return std::regex_search(annotation.begin(), annotation.end(), kListType);
}

struct Frame {
    bool is_function = false;
    int fn_index = -1;
    std::string qualname;
    int body_level = 0;
};

class OutlineBuilder {
public:
    explicit OutlineBuilder(std::string_view src) : src_(src), toks_(tokenize(src)) {}

    ModuleOutline run() {
        std::size_t i = 0;
        while (i < toks_.size()) {
            const Token& t = toks_[i];
            if (t.kind == TokenKind::EndMarker) break;
            if (t.kind == TokenKind::Indent) {
                ++level_;
                ++i;
                continue;
            }
            if (t.kind == TokenKind::Dedent) {
                --level_;
                ++i;
                continue;
            }
            if (t.kind == TokenKind::Newline) {
                ++i;
                continue;
            }
            close_frames();
            std::size_t j = i;
            while (toks_[j].kind != TokenKind::Newline && toks_[j].kind != TokenKind::EndMarker) ++j;
            statement(i, j);
            i = j;
        }
        frames_.clear();
        resolve_origins();
        return std::move(out_);
    }

private:
    void close_frames() {
        while (!frames_.empty() && level_ < frames_.back().body_level) frames_.pop_back();
    }

    int innermost_function() const {
        for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
            if (it->is_function) return it->fn_index;
        }
        return -1;
    }

    std::string qual_prefix() const { return frames_.empty() ? std::string{} : frames_.back().qualname + "."; }

    void extend_frames(int end_line) {
        for (const auto& f : frames_) {
            if (f.is_function) {
                auto& fn = out_.functions[static_cast<std::size_t>(f.fn_index)];
                fn.end_line = std::max(fn.end_line, end_line);
            }
        }
    }

    // Index of the bracket closing the one opened at `open`.
    std::size_t match(std::size_t open) const {
        int depth = 0;
        for (std::size_t k = open; k < toks_.size(); ++k) {
            const Token& t = toks_[k];
            if (t.kind != TokenKind::Op) continue;
            if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
            if (t.text == ")" || t.text == "]" || t.text == "}") {
                if (--depth == 0) return k;
            }
        }
        return toks_.size() - 1;
    }

    // First top-level occurrence of `op` in [b, e), or e.
    std::size_t find_top_level(std::size_t b, std::size_t e, std::string_view op) const {
        int depth = 0;
        for (std::size_t k = b; k < e; ++k) {
            const Token& t = toks_[k];
            if (t.kind != TokenKind::Op) continue;
            if (depth == 0 && t.text == op) return k;
            if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
            if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
        }
        return e;
    }

    std::vector<std::pair<std::size_t, std::size_t>> split_top_level(std::size_t b, std::size_t e) const {
        std::vector<std::pair<std::size_t, std::size_t>> parts;
        std::size_t start = b;
        while (start < e) {
            const std::size_t comma = find_top_level(start, e, ",");
            parts.emplace_back(start, comma);
            if (comma == e) break;
            start = comma + 1;
        }
        return parts;
    }

    std::string slice(std::size_t b, std::size_t e) const {
        if (b >= e) return {};
        return std::string(src_.substr(toks_[b].begin, toks_[e - 1].end - toks_[b].begin));
    }

    void bind_name(const std::string& name) {
        if (frames_.empty()) {
            out_.module_bindings.insert(name);
        } else if (frames_.back().is_function) {
            out_.functions[static_cast<std::size_t>(frames_.back().fn_index)].locals.insert(name);
        }
    }

    void statement(std::size_t b, std::size_t e) {
        std::size_t s = b;
        if (toks_[s].is_name("async") && s + 1 < e) ++s;
        const Token& head = toks_[s];
        if (head.is_name("def") && s + 1 < e && toks_[s + 1].kind == TokenKind::Name) {
            function_header(s, e);
            return;
        }
        if (head.is_name("class") && s + 1 < e && toks_[s + 1].kind == TokenKind::Name) {
            class_header(s, e);
            return;
        }
        if (head.is_name("import")) {
            import_stmt(s + 1, e);
        } else if (head.is_name("from")) {
            from_import_stmt(s + 1, e);
        } else if (head.is_name("global")) {
            const int fn = innermost_function();
            for (std::size_t k = s + 1; k < e; ++k) {
                if (toks_[k].kind != TokenKind::Name) continue;
                if (fn >= 0) {
                    out_.functions[static_cast<std::size_t>(fn)].declared_globals.insert(std::string(toks_[k].text));
                }
            }
        } else {
            scan_calls(b, e, b, e);
            collect_targets(b, e);
        }
        extend_frames(toks_[e - 1].end_line);
    }

    void function_header(std::size_t def_kw, std::size_t e) {
        const std::size_t name_idx = def_kw + 1;
        std::size_t colon = e;
        std::vector<Parameter> params;
        if (name_idx + 1 < e && toks_[name_idx + 1].is_op("(")) {
            const std::size_t rp = match(name_idx + 1);
            params = parse_params(name_idx + 2, rp);
            colon = find_top_level(rp + 1, e, ":");
            // defaults and annotations evaluate in the enclosing scope
            scan_calls(name_idx + 1, std::min(colon, e), def_kw, e);
        }
        const std::string name(toks_[name_idx].text);
        FunctionDef fn;
        fn.name = name;
        fn.qualname = qual_prefix() + name;
        fn.def_line = toks_[def_kw].line;
        fn.end_line = colon < e ? toks_[colon].end_line : toks_[e - 1].end_line;
        fn.parent = innermost_function();
        fn.is_method = !frames_.empty() && !frames_.back().is_function;
        fn.params = std::move(params);
        for (const auto& p : fn.params) fn.locals.insert(p.name);
        bind_name(name);
        extend_frames(fn.end_line);

        const int index = static_cast<int>(out_.functions.size());
        out_.functions.push_back(std::move(fn));
        Frame frame{true, index, out_.functions.back().qualname, level_ + 1};
        open_body(frame, colon, e);
    }

    void class_header(std::size_t class_kw, std::size_t e) {
        const std::size_t name_idx = class_kw + 1;
        std::size_t after = name_idx + 1;
        if (after < e && toks_[after].is_op("(")) {
            const std::size_t rp = match(after);
            scan_calls(after, rp + 1, class_kw, e);
            after = rp + 1;
        }
        const std::size_t colon = find_top_level(after, e, ":");
        const std::string name(toks_[name_idx].text);
        bind_name(name);
        extend_frames(toks_[e - 1].end_line);
        Frame frame{false, -1, qual_prefix() + name, level_ + 1};
        open_body(frame, colon, e);
    }

    void open_body(Frame frame, std::size_t colon, std::size_t e) {
        frames_.push_back(std::move(frame));
        if (colon + 1 < e) {
            // simple suite on the header line: `def f(x): return g(x)`
            statement(colon + 1, e);
            frames_.pop_back();
        }
    }

    std::vector<Parameter> parse_params(std::size_t b, std::size_t e) const {
        std::vector<Parameter> params;
        for (auto [s, t] : split_top_level(b, e)) {
            while (s < t && (toks_[s].is_op("*") || toks_[s].is_op("**"))) ++s;
            if (s >= t || toks_[s].kind != TokenKind::Name) continue;
            Parameter p;
            p.name = std::string(toks_[s].text);
            const std::size_t eq = find_top_level(s + 1, t, "=");
            if (s + 1 < t && toks_[s + 1].is_op(":")) p.annotation = slice(s + 2, eq);
            p.list_typed = is_list_annotation(p.annotation) || (eq + 1 < t && toks_[eq + 1].is_op("["));
            params.push_back(std::move(p));
        }
        return params;
    }

    void import_stmt(std::size_t b, std::size_t e) {
        for (auto [s, t] : split_top_level(b, e)) {
            std::string dotted;
            std::size_t k = s;
            while (k < t && (toks_[k].kind == TokenKind::Name || toks_[k].is_op(".")) && !toks_[k].is_name("as")) {
                dotted += toks_[k].text;
                ++k;
            }
            if (dotted.empty()) continue;
            std::string local;
            std::string target;
            if (k + 1 < t && toks_[k].is_name("as")) {
                local = std::string(toks_[k + 1].text);
                target = dotted;
            } else {
                local = dotted.substr(0, dotted.find('.'));
                target = local;
            }
            out_.imports.push_back({local, target, toks_[s].line});
            bind_name(local);
        }
    }

    void from_import_stmt(std::size_t b, std::size_t e) {
        std::string module;
        std::size_t k = b;
        while (k < e && !toks_[k].is_name("import")) {
            module += toks_[k].text;
            ++k;
        }
        if (k >= e) return;
        ++k;
        if (k < e && toks_[k].is_op("(")) {
            e = match(k);
            ++k;
        }
        if (k < e && toks_[k].is_op("*")) {
            out_.star_imports.push_back(module);
            return;
        }
        for (auto [s, t] : split_top_level(k, e)) {
            if (s >= t || toks_[s].kind != TokenKind::Name) continue;
            const std::string name(toks_[s].text);
            const std::string local = (s + 2 < t && toks_[s + 1].is_name("as"))
                                          ? std::string(toks_[s + 2].text)
                                          : name;
            const std::string sep = (!module.empty() && module.back() == '.') ? "" : ".";
            out_.imports.push_back({local, module + sep + name, toks_[s].line});
            bind_name(local);
        }
    }

    ArgShape classify(std::size_t s, std::size_t t) const {
        if (s >= t) return ArgShape::Missing;
        if (toks_[s].kind == TokenKind::String) {
            std::size_t k = s;
            bool formatted = false;
            while (k < t && toks_[k].kind == TokenKind::String) {
                formatted = formatted || is_fstring(toks_[k]);
                ++k;
            }
            if (k == t) return formatted ? ArgShape::FormattedString : ArgShape::StringLiteral;
            // "..." % x, "..." + x, "...".format(x): the command string is assembled from parts
            if (toks_[k].is_op("%") || toks_[k].is_op("+") ||
                (toks_[k].is_op(".") && k + 1 < t && toks_[k + 1].is_name("format"))) {
                return ArgShape::FormattedString;
            }
            return ArgShape::Other;
        }
        if (t - s == 1 && toks_[s].kind == TokenKind::Name && !is_keyword(toks_[s].text)) return ArgShape::NameRef;
        if (toks_[s].is_op("[") && match(s) == t - 1) return ArgShape::ListLiteral;
        return ArgShape::Other;
    }

    void scan_calls(std::size_t b, std::size_t e, std::size_t stmt_b, std::size_t stmt_e) {
        for (std::size_t i = b; i < e; ++i) {
            const Token& t = toks_[i];
            if (t.kind != TokenKind::Name || is_keyword(t.text)) continue;
            if (i > stmt_b && toks_[i - 1].is_op(".")) continue;
            std::string chain(t.text);
            std::size_t j = i;
            while (j + 2 < e && toks_[j + 1].is_op(".") && toks_[j + 2].kind == TokenKind::Name) {
                chain += '.';
                chain += toks_[j + 2].text;
                j += 2;
            }
            if (j + 1 >= e || !toks_[j + 1].is_op("(")) continue;
            record_call(chain, i, j + 1, stmt_b, stmt_e);
        }
    }

    void record_call(const std::string& chain, std::size_t head, std::size_t lp, std::size_t stmt_b,
                     std::size_t stmt_e) {
        const std::size_t rp = match(lp);
        CallSite call;
        call.callee = chain;
        call.line = toks_[head].line;
        call.stmt_start_line = toks_[stmt_b].line;
        call.stmt_end_line = toks_[stmt_e - 1].end_line;
        call.scope = innermost_function();

        std::optional<std::pair<std::size_t, std::size_t>> positional;
        std::optional<std::pair<std::size_t, std::size_t>> keyword_command;
        bool star_first = false;
        for (auto [s, t] : split_top_level(lp + 1, rp)) {
            if (s >= t) continue;
            const bool is_kw = toks_[s].kind == TokenKind::Name && s + 1 < t && toks_[s + 1].is_op("=");
            if (is_kw) {
                const auto key = toks_[s].text;
                if (key == "shell") {
                    call.shell_true_literal = (t - (s + 2) == 1 && toks_[s + 2].is_name("True"));
                }
                if (!keyword_command &&
                    std::find(std::begin(kCommandKeywords), std::end(kCommandKeywords), key) !=
                        std::end(kCommandKeywords)) {
                    keyword_command = std::make_pair(s + 2, t);
                }
                continue;
            }
            if (toks_[s].is_op("**")) continue;
            if (!positional) {
                if (toks_[s].is_op("*")) star_first = true;
                positional = std::make_pair(s, t);
            }
        }
        if (positional) {
            call.command_shape = star_first ? ArgShape::Other : classify(positional->first, positional->second);
            if (call.command_shape == ArgShape::NameRef) call.command_name = std::string(toks_[positional->first].text);
        } else if (keyword_command) {
            call.command_shape = classify(keyword_command->first, keyword_command->second);
            if (call.command_shape == ArgShape::NameRef) {
                call.command_name = std::string(toks_[keyword_command->first].text);
            }
        }
        out_.calls.push_back(std::move(call));
    }

    void add_target_names(std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const Token& t = toks_[k];
            if (t.kind != TokenKind::Name || is_keyword(t.text)) continue;
            if (k > b && toks_[k - 1].is_op(".")) continue;
            if (k + 1 < e && (toks_[k + 1].is_op(".") || toks_[k + 1].is_op("(") || toks_[k + 1].is_op("["))) continue;
            bind_name(std::string(t.text));
        }
    }

    void collect_targets(std::size_t b, std::size_t e) {
        std::size_t s = b;
        if (toks_[s].is_name("async")) ++s;
        if (toks_[s].is_name("for")) {
            std::size_t in = s + 1;
            while (in < e && !toks_[in].is_name("in")) ++in;
            add_target_names(s + 1, in);
        }
        for (std::size_t k = b; k + 1 < e; ++k) {
            if (toks_[k].is_name("as") && toks_[k + 1].kind == TokenKind::Name) bind_name(std::string(toks_[k + 1].text));
            if (toks_[k].is_op(":=") && k > b && toks_[k - 1].kind == TokenKind::Name) {
                bind_name(std::string(toks_[k - 1].text));
            }
        }
        // plain, chained and augmented assignment at statement depth 0
        int depth = 0;
        std::size_t segment_start = b;
        for (std::size_t k = b; k < e; ++k) {
            const Token& t = toks_[k];
            if (t.kind != TokenKind::Op) continue;
            if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
            if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
            if (depth != 0) continue;
            const bool augmented = t.text.size() >= 2 && t.text.back() == '=' && t.text != "==" && t.text != "<=" &&
                                   t.text != ">=" && t.text != "!=" && t.text != ":=";
            if (t.text == "=" || augmented) {
                add_target_names(segment_start, k);
                segment_start = k + 1;
            }
        }
        if (s + 1 < e && toks_[s].kind == TokenKind::Name && !is_keyword(toks_[s].text) && toks_[s + 1].is_op(":")) {
            bind_name(std::string(toks_[s].text));
        }
    }

    ArgOrigin origin_in_function(const std::string& name, int fn_index) const {
        const auto& fn = out_.functions[static_cast<std::size_t>(fn_index)];
        if (fn.declared_globals.count(name)) return ArgOrigin::ModuleGlobal;
        for (const auto& p : fn.params) {
            if (p.name == name) return p.list_typed ? ArgOrigin::ListParameter : ArgOrigin::Parameter;
        }
        if (fn.locals.count(name)) return ArgOrigin::Local;
        if (fn.parent >= 0) return origin_in_function(name, fn.parent);
        return out_.module_bindings.count(name) ? ArgOrigin::ModuleGlobal : ArgOrigin::Unknown;
    }

    void resolve_origins() {
        for (auto& call : out_.calls) {
            if (call.command_shape != ArgShape::NameRef) continue;
            if (call.scope >= 0) {
                call.command_origin = origin_in_function(call.command_name, call.scope);
            } else {
                call.command_origin =
                    out_.module_bindings.count(call.command_name) ? ArgOrigin::ModuleGlobal : ArgOrigin::Unknown;
            }
        }
    }

    std::string_view src_;
    std::vector<Token> toks_;
    std::vector<Frame> frames_;
    int level_ = 0;
    ModuleOutline out_;
};

}  // namespace

ModuleOutline outline_module(std::string_view source) { return OutlineBuilder(source).run(); }

std::string dedent(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        const auto end = nl == std::string_view::npos ? text.size() : nl + 1;
        lines.push_back(text.substr(start, end - start));
        start = end;
    }
    std::optional<std::string_view> common;
    for (auto line : lines) {
        const auto content = line.find_first_not_of(" \t\r\n");
        if (content == std::string_view::npos) continue;
        const auto indent = line.substr(0, content);
        if (!common) {
            common = indent;
        } else {
            std::size_t n = 0;
            while (n < common->size() && n < indent.size() && (*common)[n] == indent[n]) ++n;
            common = common->substr(0, n);
        }
    }
    std::string out;
    out.reserve(text.size());
    for (auto line : lines) {
        if (line.find_first_not_of(" \t\r\n") == std::string_view::npos) {
            out += line.back() == '\n' ? "\n" : "";
        } else {
            out += line.substr(common ? common->size() : 0);
        }
    }
    return out;
}

}  // namespace cmdinj::python
