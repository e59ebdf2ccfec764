#include <gtest/gtest.h>

#include "cmdinj/error.hpp"
#include "cmdinj/python_lexer.hpp"

using namespace cmdinj;
using namespace cmdinj::python;

namespace {

std::vector<TokenKind> kinds(std::string_view src) {
    std::vector<TokenKind> out;
    for (const auto& t : tokenize(src)) out.push_back(t.kind);
    return out;
}

ErrorCode error_of(std::string_view src) {
    try {
        tokenize(src);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Lexer, IndentDedent) {
    using K = TokenKind;
    const auto k = kinds("def f():\n    return 1\n");
    const std::vector<K> want{K::Name, K::Name, K::Op,     K::Op,      K::Op,    K::Newline,
                              K::Indent, K::Name, K::Number, K::Newline, K::Dedent, K::EndMarker};
    EXPECT_EQ(k, want);
}

TEST(Lexer, BracketsJoinLines) {
    const auto toks = tokenize("x = f(\n  1,\n\n  2)\ny = 3\n");
    int newlines = 0;
    for (const auto& t : toks) newlines += t.kind == TokenKind::Newline;
    EXPECT_EQ(newlines, 2);
}

TEST(Lexer, BackslashContinuation) {
    const auto toks = tokenize("x = 1 + \\\n    2\n");
    int indents = 0;
    for (const auto& t : toks) indents += t.kind == TokenKind::Indent;
    EXPECT_EQ(indents, 0);
}

TEST(Lexer, StringsHideSinkText) {
    const auto toks = tokenize("s = 'os.system(x)'  # eval(y)\n");
    for (const auto& t : toks) {
        EXPECT_NE(t.text, "eval");
        EXPECT_NE(t.text, "system");
    }
}

TEST(Lexer, TripleQuotedSpansLines) {
    const auto toks = tokenize("d = \"\"\"a\nexec(b)\n\"\"\"\nz = 1\n");
    ASSERT_GE(toks.size(), 3u);
    EXPECT_EQ(toks[2].kind, TokenKind::String);
    EXPECT_EQ(toks[2].line, 1);
    EXPECT_EQ(toks[2].end_line, 3);
}

TEST(Lexer, StringPrefixes) {
    const auto toks = tokenize("a = f'{x}'\nb = rb'y'\nc = 'z'\n");
    std::vector<const Token*> strs;
    for (const auto& t : toks) {
        if (t.kind == TokenKind::String) strs.push_back(&t);
    }
    ASSERT_EQ(strs.size(), 3u);
    EXPECT_TRUE(is_fstring(*strs[0]));
    EXPECT_FALSE(is_fstring(*strs[1]));
    EXPECT_EQ(string_prefix(*strs[1]), "rb");
    EXPECT_EQ(string_prefix(*strs[2]), "");
}

TEST(Lexer, Errors) {
    EXPECT_EQ(error_of("x = 'abc\n"), ErrorCode::SyntaxError);
    EXPECT_EQ(error_of("x = (1, 2\n"), ErrorCode::SyntaxError);
    EXPECT_EQ(error_of("x = 1)\n"), ErrorCode::SyntaxError);
    EXPECT_EQ(error_of("if x:\n        a\n    b\n"), ErrorCode::SyntaxError);
}

TEST(Lexer, Keywords) {
    EXPECT_TRUE(is_keyword("def"));
    EXPECT_TRUE(is_keyword("lambda"));
    EXPECT_FALSE(is_keyword("eval"));
    EXPECT_FALSE(is_keyword("exec"));
}
