#include <gtest/gtest.h>

#include "cmdinj/extractor.hpp"
#include "cmdinj/python_outline.hpp"

using namespace cmdinj;
using namespace cmdinj::python;

namespace {

const CallSite* call_named(const ModuleOutline& o, std::string_view callee) {
    for (const auto& c : o.calls) {
        if (c.callee == callee) return &c;
    }
    return nullptr;
}

}  // namespace

TEST(Imports, AliasForms) {
    EXPECT_EQ(resolve_imports("import subprocess as sp\n"), (ImportMap{{"sp", "subprocess"}}));
    EXPECT_EQ(resolve_imports("from subprocess import run as launch\n"), (ImportMap{{"launch", "subprocess.run"}}));
}

TEST(Imports, SixFormsAgainstHandTable) {
    const char* src =
        "import os\n"
        "import os.path\n"
        "import subprocess as sp, shlex\n"
        "from os import system, popen as po\n"
        "from subprocess import (\n"
        "    run,\n"
        "    Popen as P,\n"
        ")\n"
        "from . import helpers\n"
        "from ..pkg.mod import thing as t\n"
        "try:\n"
        "    import json\n"
        "except ImportError:\n"
        "    import simplejson as json\n";
    const ImportMap want{
        {"os", "os"},          {"os", "os"},
        {"sp", "subprocess"},  {"shlex", "shlex"},
        {"system", "os.system"}, {"po", "os.popen"},
        {"run", "subprocess.run"}, {"P", "subprocess.Popen"},
        {"helpers", ".helpers"}, {"t", "..pkg.mod.thing"},
        {"json", "json"},      {"json", "simplejson"},
    };
    EXPECT_EQ(resolve_imports(src), want);
}

TEST(Imports, StarImport) {
    const auto o = outline_module("from subprocess import *\nfrom os.path import join\n");
    ASSERT_EQ(o.star_imports.size(), 1u);
    EXPECT_EQ(o.star_imports[0], "subprocess");
}

TEST(Outline, FunctionSpansAndQualnames) {
    const char* src =
        "import functools\n"
        "\n"
        "class A:\n"
        "    def m(self, x):\n"
        "        return x\n"
        "\n"
        "def outer():\n"
        "    def inner(y):\n"
        "        return (y +\n"
        "                1)\n"
        "    return inner\n"
        "\n"
        "@functools.wraps(print)\n"
        "async def co(): pass\n";
    const auto o = outline_module(src);
    ASSERT_EQ(o.functions.size(), 4u);
    EXPECT_EQ(o.functions[0].qualname, "A.m");
    EXPECT_TRUE(o.functions[0].is_method);
    EXPECT_EQ(o.functions[0].def_line, 4);
    EXPECT_EQ(o.functions[0].end_line, 5);
    EXPECT_EQ(o.functions[1].qualname, "outer");
    EXPECT_EQ(o.functions[1].end_line, 11);
    EXPECT_EQ(o.functions[2].qualname, "outer.inner");
    EXPECT_EQ(o.functions[2].parent, 1);
    EXPECT_EQ(o.functions[2].end_line, 10);
    EXPECT_EQ(o.functions[3].qualname, "co");
    EXPECT_EQ(o.functions[3].def_line, 14);
    EXPECT_EQ(o.functions[3].end_line, 14);
}

TEST(Outline, ParamsAndListTyping) {
    const auto o = outline_module(
        "def f(a, b: List[str], *rest, c: int = 3, d=[1], **kw):\n"
        "    pass\n");
    ASSERT_EQ(o.functions.size(), 1u);
    const auto& ps = o.functions[0].params;
    ASSERT_EQ(ps.size(), 6u);
    EXPECT_EQ(ps[0].name, "a");
    EXPECT_FALSE(ps[0].list_typed);
    EXPECT_EQ(ps[1].annotation, "List[str]");
    EXPECT_TRUE(ps[1].list_typed);
    EXPECT_EQ(ps[2].name, "rest");
    EXPECT_FALSE(ps[3].list_typed);
    EXPECT_TRUE(ps[4].list_typed);
    EXPECT_EQ(ps[5].name, "kw");
}

TEST(Outline, CommandArgumentShapes) {
    const char* src =
        "import subprocess, os\n"
        "def f(pid, args: list, name):\n"
        "    subprocess.Popen(args=f\"pgrep -P {pid}\", shell=True)\n"
        "    subprocess.run(args)\n"
        "    subprocess.call(['ls', name])\n"
        "    os.system('echo hi')\n"
        "    os.popen('echo ' + name)\n"
        "    subprocess.check_output('x %s' % name, shell=flag)\n"
        "    eval(name.strip())\n"
        "    exec()\n";
    const auto o = outline_module(src);
    const auto* popen = call_named(o, "subprocess.Popen");
    ASSERT_TRUE(popen);
    EXPECT_EQ(popen->command_shape, ArgShape::FormattedString);
    EXPECT_TRUE(popen->shell_true_literal);
    const auto* run = call_named(o, "subprocess.run");
    ASSERT_TRUE(run);
    EXPECT_EQ(run->command_shape, ArgShape::NameRef);
    EXPECT_EQ(run->command_name, "args");
    EXPECT_EQ(run->command_origin, ArgOrigin::ListParameter);
    EXPECT_EQ(call_named(o, "subprocess.call")->command_shape, ArgShape::ListLiteral);
    EXPECT_EQ(call_named(o, "os.system")->command_shape, ArgShape::StringLiteral);
    EXPECT_EQ(call_named(o, "os.popen")->command_shape, ArgShape::FormattedString);
    const auto* co = call_named(o, "subprocess.check_output");
    EXPECT_EQ(co->command_shape, ArgShape::FormattedString);
    EXPECT_FALSE(co->shell_true_literal);
    EXPECT_EQ(call_named(o, "eval")->command_shape, ArgShape::Other);
    EXPECT_EQ(call_named(o, "exec")->command_shape, ArgShape::Missing);
}

TEST(Outline, NameOrigins) {
    const char* src =
        "CFG = 'x'\n"
        "def f(p):\n"
        "    local = p\n"
        "    eval(local)\n"
        "    eval(p)\n"
        "    eval(CFG)\n"
        "    eval(nowhere)\n"
        "def g():\n"
        "    global CFG\n"
        "    CFG = 'y'\n"
        "    eval(CFG)\n"
        "def h(q):\n"
        "    def k():\n"
        "        eval(q)\n";
    const auto o = outline_module(src);
    std::vector<ArgOrigin> got;
    for (const auto& c : o.calls) {
        if (c.callee == "eval") got.push_back(c.command_origin);
    }
    const std::vector<ArgOrigin> want{ArgOrigin::Local,        ArgOrigin::Parameter, ArgOrigin::ModuleGlobal,
                                      ArgOrigin::Unknown,      ArgOrigin::ModuleGlobal, ArgOrigin::Parameter};
    EXPECT_EQ(got, want);
}

TEST(Outline, ModuleBindings) {
    const auto o = outline_module("x = 1\ndef eval(s):\n    pass\nclass C: pass\nfor i in []: pass\n");
    EXPECT_TRUE(o.module_bindings.count("x"));
    EXPECT_TRUE(o.module_bindings.count("eval"));
    EXPECT_TRUE(o.module_bindings.count("C"));
    EXPECT_TRUE(o.module_bindings.count("i"));
}

TEST(Outline, MultiLineCallStatementSpan) {
    const auto o = outline_module("import os\nos.system(\n    'a'\n)\n");
    ASSERT_EQ(o.calls.size(), 1u);
    EXPECT_EQ(o.calls[0].line, 2);
    EXPECT_EQ(o.calls[0].stmt_start_line, 2);
    EXPECT_EQ(o.calls[0].stmt_end_line, 4);
}

TEST(Dedent, MatchesTextwrap) {
    EXPECT_EQ(dedent("    def f():\n        pass\n"), "def f():\n    pass\n");
    EXPECT_EQ(dedent("  a\n\n    b\n"), "a\n\n  b\n");
    EXPECT_EQ(dedent("a\n  b\n"), "a\n  b\n");
    EXPECT_EQ(dedent("\tx\n\ty\n"), "x\ny\n");
}
