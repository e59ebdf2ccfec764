#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include "cmdinj/extractor.hpp"
#include "cmdinj/python_outline.hpp"
#include "oracle/grep_oracle.hpp"
#include "test_support.hpp"

using namespace cmdinj;
using python::ArgOrigin;
using python::ArgShape;

namespace {

std::filesystem::path corpus_root() { return testing_support::fixtures() / "corpus"; }

CandidateSet fixture_candidates(const SinkCatalog& catalog = SinkCatalog::builtin_default(), unsigned par = 1) {
    ExtractOptions opts;
    opts.project_per_top_dir = true;
    opts.parallelism = par;
    return extract_corpus(scan_repo(corpus_root()), catalog, opts);
}

std::vector<oracle::HitRow> to_rows(const CandidateSet& set) {
    std::vector<oracle::HitRow> rows;
    for (const auto& c : set.candidates) {
        for (const auto& h : c.matched_sinks) {
            if (c.is_module_level()) {
                rows.push_back({c.file, "<module>", "-", h.sink, h.line});
            } else {
                rows.push_back({c.file, c.qualname, std::to_string(c.start_line) + "-" + std::to_string(c.end_line),
                                h.sink, h.line});
            }
        }
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

const CandidateFunction& by_qualname(const CandidateSet& set, std::string_view q) {
    for (const auto& c : set.candidates) {
        if (c.qualname == q) return c;
    }
    throw std::runtime_error("no candidate " + std::string(q));
}

SourceFileRecord record(const std::string& path) { return {path, 0, ""}; }

std::vector<std::string> sinks_in(std::string_view src, const SinkCatalog& cat = SinkCatalog::builtin_default()) {
    std::vector<std::string> out;
    for (const auto& c : extract_candidates(src, record("m.py"), cat, "p").candidates) {
        for (const auto& h : c.matched_sinks) out.push_back(h.sink);
    }
    return out;
}

}  // namespace

TEST(Extractor, MatchesFrozenAstTable) {
    const auto got = to_rows(fixture_candidates());
    const auto want = oracle::read_frozen_table(testing_support::fixtures() / "expected_hits.tsv");
    ASSERT_EQ(want.size(), 16u);
    EXPECT_EQ(got, want);
}

TEST(Extractor, MatchesGrepOracle) {
    EXPECT_EQ(to_rows(fixture_candidates()), oracle::scan_tree(corpus_root()));
}

TEST(Extractor, ParallelMatchesSerial) { EXPECT_EQ(fixture_candidates(SinkCatalog::builtin_default(), 4).candidates,
                                                   fixture_candidates().candidates); }

TEST(Extractor, CandidateFields) {
    const auto set = fixture_candidates();
    EXPECT_EQ(set.candidates.size(), 15u);
    const auto& c = by_qualname(set, "get_child_pids");
    EXPECT_EQ(c.project, "alpha");
    EXPECT_EQ(c.file, "alpha/procs.py");
    EXPECT_EQ(c.case_id, "alpha:alpha/procs.py:get_child_pids:4");
    EXPECT_EQ(c.start_line, 4);
    EXPECT_EQ(c.end_line, 12);
    EXPECT_EQ(c.loc, 9);
    ASSERT_EQ(c.matched_sinks.size(), 1u);
    EXPECT_EQ(c.matched_sinks[0].sink, "subprocess.Popen");
    EXPECT_EQ(c.matched_sinks[0].arg_shape, ArgShape::FormattedString);
    EXPECT_TRUE(c.matched_sinks[0].shell_true);
    EXPECT_EQ(c.source_text.rfind("def get_child_pids(pid):\n", 0), 0u);

    const auto& inner = by_qualname(set, "outer.inner");
    EXPECT_EQ(inner.function_name, "inner");

    const auto& mod = by_qualname(set, "<module>");
    EXPECT_TRUE(mod.is_module_level());
    EXPECT_EQ(mod.start_line, 4);
    EXPECT_EQ(mod.end_line, 4);
    EXPECT_EQ(mod.source_text, "os.system(\"echo setup\")\n");

    const auto& start = by_qualname(set, "start_service");
    EXPECT_EQ(start.project, "beta");
    EXPECT_EQ(start.matched_sinks[0].arg_origin, ArgOrigin::Parameter);
    EXPECT_EQ(start.matched_sinks[0].arg_name, "command");
}

TEST(Extractor, SourceTextIsExactSlice) {
    const auto set = fixture_candidates();
    for (const auto& c : set.candidates) {
        const auto text = read_file(corpus_root() / c.file);
        EXPECT_NE(text.find(c.source_text), std::string::npos) << c.case_id;
        EXPECT_EQ(static_cast<int>(std::count(c.source_text.begin(), c.source_text.end(), '\n')), c.loc);
    }
}

TEST(Extractor, SourceTextRoundTrip) {
    const auto cat = SinkCatalog::builtin_default();
    for (const auto& c : fixture_candidates().candidates) {
        if (c.is_module_level()) continue;
        const auto text = python::dedent(c.source_text);
        const auto o = python::outline_module(text);
        ASSERT_FALSE(o.functions.empty()) << c.case_id;
        EXPECT_EQ(o.functions[0].name, c.function_name);
        EXPECT_EQ(o.functions[0].end_line - o.functions[0].def_line, c.end_line - c.start_line);
        // The slice must still parse cleanly on its own.
        EXPECT_FALSE(extract_candidates(text, record(c.file), cat, c.project).skipped) << c.case_id;
    }
}

TEST(Extractor, SyntaxErrorIsSkippedNotFatal) {
    const auto r = extract_candidates("def f(:\n    eval('x'\n", record("bad.py"), SinkCatalog::builtin_default(), "p");
    EXPECT_TRUE(r.candidates.empty());
    ASSERT_TRUE(r.skipped);
    EXPECT_EQ(r.skipped->file, "bad.py");
}

TEST(Extractor, DigestMismatchIsSkipped) {
    testing_support::TempDir d;
    d.write("a.py", "import os\ndef f(c):\n    os.system(c)\n");
    auto m = scan_repo(d.path());
    d.write("a.py", "import os\n");
    const auto set = extract_corpus(m, SinkCatalog::builtin_default());
    EXPECT_TRUE(set.candidates.empty());
    ASSERT_EQ(set.skipped.size(), 1u);
}

TEST(Extractor, ShadowingAndLookalikes) {
    EXPECT_TRUE(sinks_in("def eval(x):\n    return x\ndef f():\n    eval('1')\n").empty());
    EXPECT_TRUE(sinks_in("import shutil as os\ndef f(c):\n    os.system(c)\n").empty());
    EXPECT_TRUE(sinks_in("def f(obj):\n    obj.eval('x')\n    obj.os.system('x')\n").empty());
    EXPECT_TRUE(sinks_in("def f():\n    system('x')\n").empty());
    EXPECT_EQ(sinks_in("import builtins\ndef f(c):\n    builtins.exec(c)\n"), std::vector<std::string>{"exec"});
    EXPECT_EQ(sinks_in("from os import *\ndef f(c):\n    system(c)\n"), std::vector<std::string>{"os.system"});
}

// Every import spelling of every sink must resolve back to that sink.
TEST(Extractor, AliasSoundnessProperty) {
    const auto cat = SinkCatalog::builtin_default();
    std::mt19937 rng(20240611);
    for (int iter = 0; iter < 400; ++iter) {
        const auto& e = cat.entries()[rng() % cat.size()];
        const auto dot = e.qualified_name.find('.');
        std::string header;
        std::string callee;
        if (dot == std::string::npos) {
            const bool qualified = rng() % 2;
            header = qualified ? "import builtins as bi\n" : "";
            callee = qualified ? "bi." + e.qualified_name : e.qualified_name;
        } else {
            const auto mod = e.qualified_name.substr(0, dot);
            const auto attr = e.qualified_name.substr(dot + 1);
            const std::string alias = "a" + std::to_string(rng() % 1000);
            switch (rng() % 4) {
                case 0: header = "import " + mod + "\n"; callee = e.qualified_name; break;
                case 1: header = "import " + mod + " as " + alias + "\n"; callee = alias + "." + attr; break;
                case 2: header = "from " + mod + " import " + attr + "\n"; callee = attr; break;
                default: header = "from " + mod + " import " + attr + " as " + alias + "\n"; callee = alias; break;
            }
        }
        const std::string src = header + "\n\ndef target(cmd):\n    x = 1\n    return " + callee + "(cmd)\n";
        const auto r = extract_candidates(src, record("m.py"), cat, "p");
        ASSERT_EQ(r.candidates.size(), 1u) << src;
        ASSERT_EQ(r.candidates[0].matched_sinks.size(), 1u) << src;
        EXPECT_EQ(r.candidates[0].matched_sinks[0].sink, e.qualified_name) << src;
        EXPECT_EQ(r.candidates[0].function_name, "target");
    }
}

// Shrinking the catalog can only remove candidates, never add them.
TEST(Extractor, CatalogShrinkIsMonotone) {
    const auto full_cat = SinkCatalog::builtin_default();
    const auto full = fixture_candidates(full_cat);
    std::mt19937 rng(7);
    for (int iter = 0; iter < 30; ++iter) {
        std::vector<SinkEntry> subset;
        for (const auto& e : full_cat.entries()) {
            if (rng() % 2) subset.push_back(e);
        }
        if (subset.empty()) continue;
        const SinkCatalog cat(subset);
        const auto part = fixture_candidates(cat);
        for (const auto& c : part.candidates) {
            const auto* f = full.find(c.case_id);
            if (c.is_module_level()) {
                ASSERT_TRUE(f);
                continue;
            }
            ASSERT_TRUE(f) << c.case_id;
            for (const auto& h : c.matched_sinks) {
                EXPECT_TRUE(cat.contains(h.sink));
                EXPECT_NE(std::find(f->matched_sinks.begin(), f->matched_sinks.end(), h), f->matched_sinks.end());
            }
        }
        std::size_t expected = 0;
        for (const auto& c : full.candidates) {
            expected += std::any_of(c.matched_sinks.begin(), c.matched_sinks.end(),
                                    [&](const SinkHit& h) { return cat.contains(h.sink); });
        }
        EXPECT_EQ(part.candidates.size(), expected);
    }
}

TEST(Blindspots, FixtureFlags) {
    const auto set = fixture_candidates();
    std::map<std::string, BlindspotReason> got;
    for (const auto& f : flag_blindspots(set, SinkCatalog::builtin_default())) got[set.find(f.case_id)->qualname] = f.reason;
    const std::map<std::string, BlindspotReason> want{
        {"launch_tool", BlindspotReason::ListArgument},
        {"list_dir", BlindspotReason::ListArgument},
        {"load_setting", BlindspotReason::ExternalBinding},
        {"cached", BlindspotReason::ExternalBinding},
        {"uses_exec", BlindspotReason::ExternalBinding},
    };
    EXPECT_EQ(got, want);
}

TEST(Blindspots, ListParameterExample) {
    const char* src =
        "import subprocess\n"
        "from typing import List\n"
        "def candidate_function(args: List[str]):\n"
        "    return subprocess.run(args, capture_output=True, check=True,)\n";
    CandidateSet set;
    set.candidates = extract_candidates(src, record("c.py"), SinkCatalog::builtin_default(), "p").candidates;
    const auto flags = flag_blindspots(set, SinkCatalog::builtin_default());
    ASSERT_EQ(flags.size(), 1u);
    EXPECT_EQ(flags[0].reason, BlindspotReason::ListArgument);
    EXPECT_EQ(to_string(flags[0].reason), "list_argument");
}

TEST(Blindspots, PlainStringCommandNotFlagged) {
    CandidateSet set;
    set.candidates = extract_candidates("import subprocess\ndef f(c):\n    subprocess.run(c, shell=True)\n", record("c.py"),
                                        SinkCatalog::builtin_default(), "p")
                         .candidates;
    EXPECT_TRUE(flag_blindspots(set, SinkCatalog::builtin_default()).empty());
}

TEST(Serialization, JsonlRoundTrip) {
    testing_support::TempDir d;
    const auto set = fixture_candidates();
    write_candidates_jsonl(d / "c.jsonl", set.candidates);
    EXPECT_EQ(read_candidates_jsonl(d / "c.jsonl"), set.candidates);
}

TEST(Serialization, CaseSlug) {
    const auto a = case_slug("alpha:alpha/procs.py:get_child_pids:4");
    EXPECT_EQ(a.rfind("alpha_alpha_procs.py_get_child_pids_4-", 0), 0u);
    EXPECT_EQ(a.size(), std::string("alpha_alpha_procs.py_get_child_pids_4-").size() + 8);
    EXPECT_NE(case_slug("a:b/c"), case_slug("a:b_c"));
}

TEST(Serialization, CandidateSourcesWritten) {
    testing_support::TempDir d;
    const auto set = fixture_candidates();
    write_candidate_sources(d.path(), set.candidates);
    for (const auto& c : set.candidates) EXPECT_EQ(read_file(d / (case_slug(c.case_id) + ".py")), c.source_text);
}
