#include "cmdinj/python_lexer.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "cmdinj/error.hpp"

namespace cmdinj::python {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async", "await", "break",
    "class", "continue", "def",   "del",      "elif",     "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",       "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",      "while",  "with",   "yield"};

// longest first within each length class
constexpr std::array<std::string_view, 24> kMultiCharOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@="};

constexpr std::string_view kSingleCharOps = "()[]{},:.;@=+-*/%&|^~<>!";

bool is_ident_start(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || u >= 0x80;
}

bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_string_prefix(std::string_view p) {
    std::string lower(p);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](char c) { return static_cast<char>(std::tolower(c)); });
    static constexpr std::array<std::string_view, 9> kPrefixes = {"r", "u", "b", "f", "br", "rb", "fr", "rf", ""};
    return std::find(kPrefixes.begin(), kPrefixes.end(), lower) != kPrefixes.end();
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {
        if (src_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
    }

    std::vector<Token> run() {
        indents_.push_back(0);
        while (pos_ < src_.size()) {
            if (at_line_start_ && depth_ == 0) {
                if (handle_indentation()) continue;  // blank or comment-only line consumed
            }
            at_line_start_ = false;
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '\\') {
                lex_continuation();
            } else if (c == '\n') {
                lex_newline();
            } else if (is_ident_start(c)) {
                lex_name_or_string();
            } else if (c == '"' || c == '\'') {
                lex_string(pos_, pos_);
            } else if ((c >= '0' && c <= '9') || (c == '.' && pos_ + 1 < src_.size() && src_[pos_ + 1] >= '0' &&
                                                  src_[pos_ + 1] <= '9')) {
                lex_number();
            } else {
                lex_op();
            }
        }
        if (depth_ > 0) fail(line_, "unexpected EOF inside brackets");
        if (!tokens_.empty() && tokens_.back().kind != TokenKind::Newline &&
            tokens_.back().kind != TokenKind::Dedent && tokens_.back().kind != TokenKind::Indent) {
            push(TokenKind::Newline, pos_, pos_, line_, line_);
        }
        while (indents_.size() > 1) {
            indents_.pop_back();
            push(TokenKind::Dedent, pos_, pos_, line_, line_);
        }
        push(TokenKind::EndMarker, pos_, pos_, line_, line_);
        return std::move(tokens_);
    }

private:
    [[noreturn]] void fail(int line, const std::string& what) const {
        throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ": " + what);
    }

    void push(TokenKind kind, std::size_t b, std::size_t e, int line, int end_line) {
        tokens_.push_back(Token{kind, src_.substr(b, e - b), line, end_line, b, e});
    }

    // Returns true when the whole physical line was blank/comment and has been consumed.
    bool handle_indentation() {
        std::size_t p = pos_;
        int col = 0;
        while (p < src_.size()) {
            const char c = src_[p];
            if (c == ' ') {
                ++col;
            } else if (c == '\t') {
                col = (col / 8 + 1) * 8;
            } else if (c == '\f') {
                col = 0;
            } else {
                break;
            }
            ++p;
        }
        if (p >= src_.size() || src_[p] == '#' || src_[p] == '\n' || src_[p] == '\r') {
            while (p < src_.size() && src_[p] != '\n') ++p;
            if (p < src_.size()) {
                ++p;
                ++line_;
            }
            pos_ = p;
            return true;
        }
        pos_ = p;
        if (col > indents_.back()) {
            indents_.push_back(col);
            push(TokenKind::Indent, p, p, line_, line_);
        } else {
            while (col < indents_.back()) {
                indents_.pop_back();
                push(TokenKind::Dedent, p, p, line_, line_);
            }
            if (col != indents_.back()) fail(line_, "unindent does not match any outer indentation level");
        }
        return false;
    }

    void lex_continuation() {
        std::size_t p = pos_ + 1;
        if (p < src_.size() && src_[p] == '\r') ++p;
        if (p >= src_.size() || src_[p] != '\n') fail(line_, "unexpected character after line continuation");
        pos_ = p + 1;
        ++line_;
    }

    void lex_newline() {
        if (depth_ == 0 && !tokens_.empty() && tokens_.back().kind != TokenKind::Newline &&
            tokens_.back().kind != TokenKind::Indent && tokens_.back().kind != TokenKind::Dedent) {
            push(TokenKind::Newline, pos_, pos_ + 1, line_, line_);
        }
        ++pos_;
        ++line_;
        if (depth_ == 0) at_line_start_ = true;
    }

    void lex_name_or_string() {
        const std::size_t start = pos_;
        std::size_t p = pos_;
        while (p < src_.size() && is_ident_char(src_[p])) ++p;
        if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'') && p - start <= 2 &&
            is_string_prefix(src_.substr(start, p - start))) {
            lex_string(start, p);
            return;
        }
        pos_ = p;
        push(TokenKind::Name, start, p, line_, line_);
    }

    void lex_string(std::size_t token_start, std::size_t quote_pos) {
        const char q = src_[quote_pos];
        const bool triple = quote_pos + 2 < src_.size() && src_[quote_pos + 1] == q && src_[quote_pos + 2] == q;
        const int start_line = line_;
        std::size_t p = quote_pos + (triple ? 3 : 1);
        for (;;) {
            if (p >= src_.size()) fail(start_line, "unterminated string literal");
            const char c = src_[p];
            if (c == '\\') {
                if (p + 1 < src_.size() && src_[p + 1] == '\n') ++line_;
                p += 2;
                continue;
            }
            if (c == '\n') {
                if (!triple) fail(start_line, "unterminated string literal");
                ++line_;
                ++p;
                continue;
            }
            if (c == q) {
                if (!triple) {
                    ++p;
                    break;
                }
                if (p + 2 < src_.size() && src_[p + 1] == q && src_[p + 2] == q) {
                    p += 3;
                    break;
                }
            }
            ++p;
        }
        pos_ = p;
        push(TokenKind::String, token_start, p, start_line, line_);
    }

    void lex_number() {
        const std::size_t start = pos_;
        std::size_t p = pos_;
        const bool hex = src_.substr(p, 2) == "0x" || src_.substr(p, 2) == "0X";
        while (p < src_.size()) {
            const char c = src_[p];
            if (is_ident_char(c) || c == '.') {
                ++p;
            } else if ((c == '+' || c == '-') && !hex && (src_[p - 1] == 'e' || src_[p - 1] == 'E')) {
                ++p;
            } else {
                break;
            }
        }
        pos_ = p;
        push(TokenKind::Number, start, p, line_, line_);
    }

    void lex_op() {
        for (auto op : kMultiCharOps) {
            if (src_.substr(pos_, op.size()) == op) {
                push(TokenKind::Op, pos_, pos_ + op.size(), line_, line_);
                pos_ += op.size();
                return;
            }
        }
        const char c = src_[pos_];
        if (kSingleCharOps.find(c) == std::string_view::npos) {
            fail(line_, std::string("invalid character '") + c + "'");
        }
        if (c == '(' || c == '[' || c == '{') {
            brackets_.push_back(c);
            ++depth_;
        } else if (c == ')' || c == ']' || c == '}') {
            const char open = c == ')' ? '(' : (c == ']' ? '[' : '{');
            if (brackets_.empty() || brackets_.back() != open) fail(line_, std::string("unmatched '") + c + "'");
            brackets_.pop_back();
            --depth_;
        }
        push(TokenKind::Op, pos_, pos_ + 1, line_, line_);
        ++pos_;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int depth_ = 0;
    bool at_line_start_ = true;
    std::vector<int> indents_;
    std::string brackets_;
    std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

std::string_view string_prefix(const Token& token) {
    std::size_t n = 0;
    while (n < token.text.size() && token.text[n] != '"' && token.text[n] != '\'') ++n;
    return token.text.substr(0, n);
}

bool is_fstring(const Token& token) {
    if (token.kind != TokenKind::String) return false;
    const auto p = string_prefix(token);
    return p.find('f') != std::string_view::npos || p.find('F') != std::string_view::npos;
}

bool is_keyword(std::string_view word) {
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

}  // namespace cmdinj::python
