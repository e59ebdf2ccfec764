#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>

#include "cmdinj/error.hpp"
#include "cmdinj/sandbox.hpp"
#include "cmdinj/testgen.hpp"
#include "test_support.hpp"

using namespace cmdinj;
using testing_support::TempDir;

namespace {

SecurityTest code(std::string body) {
    SecurityTest t;
    t.case_id = "c";
    t.original_code = body;
    t.normalized_code = std::move(body);
    return t;
}

std::filesystem::path prepare(const TempDir& dir, const std::string& body) {
    const auto work = dir / "work";
    std::filesystem::create_directories(work);
    return materialize(code(body), work);
}

ResourceLimits quick(double timeout = 20) {
    ResourceLimits l;
    l.timeout_s = timeout;
    return l;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* kInjected = R"(import os
import unittest


def run(cmd):
    os.system("echo " + cmd)


class T(unittest.TestCase):
    def test_injection(self):
        print("visible only in the record")
        run("x; rm sentinel.txt")
        self.assertFalse(os.path.exists("sentinel.txt"))
)";

}  // namespace

TEST(Sandbox, InjectedCommandDeletesSentinel) {
    TempDir dir;
    const auto o = execute(prepare(dir, kInjected), quick(), default_runner(), "case-1");
    EXPECT_EQ(o.case_id, "case-1");
    EXPECT_EQ(o.status, OutcomeStatus::Confirmed);
    EXPECT_TRUE(o.sentinel_deleted);
    EXPECT_EQ(o.runner_status, "passed");
    EXPECT_FALSE(o.error_kind.has_value());
    EXPECT_NE(o.stdout_excerpt.find("visible only in the record"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(dir / "work/sentinel.txt"));
}

TEST(Sandbox, FailedAssertionIsRefuted) {
    TempDir dir;
    const auto o = execute(prepare(dir, "import unittest\n\n\nclass T(unittest.TestCase):\n    def test(self):\n"
                                        "        self.assertEqual(1, 2)\n"),
                           quick());
    EXPECT_EQ(o.status, OutcomeStatus::Refuted);
    EXPECT_EQ(o.runner_status, "failed");
    EXPECT_FALSE(o.sentinel_deleted);
    EXPECT_NE(o.stderr_excerpt.find("AssertionError"), std::string::npos);
}

TEST(Sandbox, ImportErrorIsInvalid) {
    TempDir dir;
    const auto o = execute(prepare(dir, "import not_a_real_module_xyz\n"), quick());
    EXPECT_EQ(o.status, OutcomeStatus::Invalid);
    EXPECT_EQ(o.error_kind, "import_error");
    EXPECT_EQ(o.error_detail, "ModuleNotFoundError");
    EXPECT_NE(o.stderr_excerpt.find("No module named 'not_a_real_module_xyz'"), std::string::npos);
}

TEST(Sandbox, NameErrorInsideTestIsInvalidOther) {
    TempDir dir;
    const auto o = execute(prepare(dir, "import unittest\n\n\nclass T(unittest.TestCase):\n    def test(self):\n"
                                        "        os.getcwd()\n"),
                           quick());
    EXPECT_EQ(o.status, OutcomeStatus::Invalid);
    EXPECT_EQ(o.error_kind, "other");
    EXPECT_EQ(o.error_detail, "NameError");
    EXPECT_NE(o.stderr_excerpt.find("NameError: name 'os' is not defined"), std::string::npos);
}

TEST(Sandbox, DeletedSentinelOverridesError) {
    TempDir dir;
    const auto o = execute(prepare(dir, "import os\nos.remove('sentinel.txt')\nraise RuntimeError('late')\n"), quick());
    EXPECT_EQ(o.status, OutcomeStatus::Confirmed);
    EXPECT_TRUE(o.sentinel_deleted);
    EXPECT_EQ(o.runner_status, "error");
    EXPECT_EQ(o.error_detail, "RuntimeError");
}

TEST(Sandbox, TimeoutKillsProcessGroup) {
    TempDir dir;
    const auto body = "import subprocess\nimport time\nimport unittest\n\n\nclass T(unittest.TestCase):\n"
                      "    def test(self):\n        subprocess.Popen(['sleep', '300'])\n"
                      "        while True:\n            time.sleep(1)\n";
    const auto t0 = std::chrono::steady_clock::now();
    const auto o = execute(prepare(dir, body), quick(1.0));
    const double elapsed = seconds_since(t0);
    EXPECT_EQ(o.status, OutcomeStatus::Invalid);
    EXPECT_EQ(o.error_kind, "timeout");
    EXPECT_LT(elapsed, 1.0 + 2.0);
    EXPECT_GE(o.duration_s, 1.0);
}

TEST(Sandbox, EnvironmentIsScrubbed) {
    TempDir dir;
    setenv("CMDINJ_SECRET_FOR_TEST", "leak", 1);
    const auto body = "import os\nimport unittest\n\n\nclass T(unittest.TestCase):\n    def test(self):\n"
                      "        self.assertNotIn('CMDINJ_SECRET_FOR_TEST', os.environ)\n"
                      "        self.assertEqual(os.environ['HOME'], os.getcwd())\n"
                      "        self.assertTrue(os.path.exists('sentinel.txt'))\n";
    const auto o = execute(prepare(dir, body), quick());
    unsetenv("CMDINJ_SECRET_FOR_TEST");
    EXPECT_EQ(o.status, OutcomeStatus::Confirmed) << o.stderr_excerpt;
    EXPECT_FALSE(o.sentinel_deleted);
}

TEST(Sandbox, OutputIsCappedAndKeptOutOfTheRecordLine) {
    TempDir dir;
    const auto o = execute(prepare(dir, "import sys\nprint('a' * 100000)\nsys.stderr.write('b' * 100000 + 'END')\n"
                                        "import unittest\n\n\nclass T(unittest.TestCase):\n    def test(self):\n"
                                        "        pass\n"),
                           quick());
    EXPECT_EQ(o.status, OutcomeStatus::Confirmed);
    EXPECT_LE(o.stdout_excerpt.size(), kExcerptLimit);
    EXPECT_LE(o.stderr_excerpt.size(), kExcerptLimit);
    EXPECT_EQ(o.stderr_excerpt.substr(o.stderr_excerpt.size() - 3), "END");
}

TEST(Sandbox, RunnerCrash) {
    TempDir dir;
    const auto o = execute(prepare(dir, "x = 1\n"), quick(), RunnerCommand{{"false"}});
    EXPECT_EQ(o.status, OutcomeStatus::Invalid);
    EXPECT_EQ(o.error_kind, "runner_crash");

    TempDir dir2;
    const auto garbage = execute(prepare(dir2, "x = 1\n"), quick(), RunnerCommand{{"echo", "not json"}});
    EXPECT_EQ(garbage.status, OutcomeStatus::Invalid);
    EXPECT_EQ(garbage.error_kind, "runner_crash");
}

TEST(Sandbox, Preconditions) {
    TempDir dir;
    const auto test = prepare(dir, "x = 1\n");
    auto code_of = [&](const RunnerCommand& r) {
        try {
            execute(test, quick(), r);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    EXPECT_EQ(code_of(RunnerCommand{{"definitely-not-a-binary-xyz"}}), ErrorCode::RunnerNotFound);
    EXPECT_EQ(code_of(RunnerCommand{{"python3", "/nonexistent/runner_shim.py"}}), ErrorCode::RunnerNotFound);
    EXPECT_EQ(code_of(RunnerCommand{}), ErrorCode::RunnerNotFound);
    std::filesystem::remove(dir / "work/sentinel.txt");
    EXPECT_EQ(code_of(default_runner()), ErrorCode::WorkspaceError);
    std::filesystem::remove(test);
    EXPECT_EQ(code_of(default_runner()), ErrorCode::WorkspaceError);
}

TEST(Sandbox, StatusMapping) {
    EXPECT_EQ(map_status("passed", false), OutcomeStatus::Confirmed);
    EXPECT_EQ(map_status("failed", false), OutcomeStatus::Refuted);
    EXPECT_EQ(map_status("error", false), OutcomeStatus::Invalid);
    for (const char* s : {"passed", "failed", "error", ""}) EXPECT_EQ(map_status(s, true), OutcomeStatus::Confirmed);
    EXPECT_EQ(error_kind_for("ImportError"), "import_error");
    EXPECT_EQ(error_kind_for("ModuleNotFoundError"), "import_error");
    EXPECT_EQ(error_kind_for("FileNotFoundError"), "path_error");
    EXPECT_EQ(error_kind_for("PermissionError"), "path_error");
    EXPECT_EQ(error_kind_for("ValueError"), "other");
}

TEST(Sandbox, RunRecordParsing) {
    const auto r = parse_run_record(R"({"status":"error","error_kind":"ImportError","duration_ms":4,"stdout":"","stderr":"x"})");
    EXPECT_EQ(r.status, "error");
    EXPECT_EQ(r.error_kind, "ImportError");
    EXPECT_EQ(r.duration_ms, 4);
    for (const char* bad : {"", "{}", R"({"status":"weird","duration_ms":1,"stdout":"","stderr":""})",
                            R"({"status":"error","error_kind":null,"duration_ms":1,"stdout":"","stderr":""})"}) {
        EXPECT_THROW(parse_run_record(bad), Error) << bad;
    }
}

TEST(Sandbox, OutcomeJsonRoundTrip) {
    ExecutionOutcome o;
    o.case_id = "c";
    o.status = OutcomeStatus::Invalid;
    o.error_kind = "timeout";
    o.duration_s = 1.5;
    o.stderr_excerpt = "tail";
    EXPECT_EQ(outcome_from_json(outcome_to_json(o)), o);
    for (auto s : {OutcomeStatus::Confirmed, OutcomeStatus::Refuted, OutcomeStatus::Invalid}) {
        EXPECT_EQ(outcome_status_from_string(to_string(s)), s);
    }
}
