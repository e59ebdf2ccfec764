#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace cmdinj::python {

enum class TokenKind { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

/// A token is a view into the source buffer passed to tokenize(); it must not
/// outlive that buffer. Lines are 1-based.
struct Token {
    TokenKind kind;
    std::string_view text;
    int line = 0;
    int end_line = 0;
    std::size_t begin = 0;
    std::size_t end = 0;

    bool is_op(std::string_view op) const { return kind == TokenKind::Op && text == op; }
    bool is_name(std::string_view name) const { return kind == TokenKind::Name && text == name; }
};

/// Tokenizes Python 3 source into the logical-line token stream (NEWLINE,
/// INDENT and DEDENT included; comments, blank lines and newlines inside
/// brackets dropped). Throws Error{SyntaxError} on unterminated strings,
/// unbalanced brackets and inconsistent dedents.
std::vector<Token> tokenize(std::string_view source);

/// String prefix letters of a String token, lowercased ("", "f", "rb", ...).
std::string_view string_prefix(const Token& token);
bool is_fstring(const Token& token);

bool is_keyword(std::string_view word);

}  // namespace cmdinj::python
