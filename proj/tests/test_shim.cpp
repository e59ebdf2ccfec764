#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "cmdinj/json_io.hpp"
#include "test_support.hpp"

using testing_support::fixtures;
using testing_support::TempDir;

namespace {

struct ShimRun {
    int exit_code;
    std::string out;
};

// Runs the checked-in shim on a copy of the fixture, capturing stdout only.
ShimRun run_shim(const std::string& name) {
    TempDir dir;
    std::filesystem::copy_file(fixtures() / "shim" / name, dir / name);
    const std::string cmd = "cd '" + dir.path().string() + "' && PYTHONDONTWRITEBYTECODE=1 python3 '" +
                            CMDINJ_RUNNER_SHIM + "' '" + (dir / name).string() + "' 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) throw std::runtime_error("popen failed");
    std::string out;
    std::array<char, 4096> buf{};
    for (std::size_t n; (n = fread(buf.data(), 1, buf.size(), p)) > 0;) out.append(buf.data(), n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

cmdinj::Json single_record(const ShimRun& r) {
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_FALSE(r.out.empty());
    EXPECT_EQ(r.out.back(), '\n');
    EXPECT_EQ(r.out.find('\n'), r.out.size() - 1) << "more than one line: " << r.out;
    const auto j = cmdinj::Json::parse(r.out);
    EXPECT_TRUE(j.is_object());
    for (const char* k : {"status", "error_kind", "duration_ms", "stdout", "stderr"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_TRUE(j.at("duration_ms").is_number_integer());
    EXPECT_GE(j.at("duration_ms").get<long>(), 0);
    EXPECT_TRUE(j.at("stdout").is_string());
    EXPECT_TRUE(j.at("stderr").is_string());
    return j;
}

}  // namespace

TEST(RunnerShim, PassingTest) {
    const auto j = single_record(run_shim("passing_test.py"));
    EXPECT_EQ(j.at("status"), "passed");
    EXPECT_TRUE(j.at("error_kind").is_null());
    EXPECT_NE(j.at("stdout").get<std::string>().find("stdout from a passing test"), std::string::npos);
}

TEST(RunnerShim, FailingAssertion) {
    const auto j = single_record(run_shim("failing_test.py"));
    EXPECT_EQ(j.at("status"), "failed");
    EXPECT_TRUE(j.at("error_kind").is_null());
    const auto err = j.at("stderr").get<std::string>();
    EXPECT_NE(err.find("stderr from a failing test"), std::string::npos);
    EXPECT_NE(err.find("AssertionError"), std::string::npos);
}

TEST(RunnerShim, ImportErrorAtLoad) {
    const auto j = single_record(run_shim("import_error_test.py"));
    EXPECT_EQ(j.at("status"), "error");
    EXPECT_EQ(j.at("error_kind"), "ImportError");
    EXPECT_NE(j.at("stderr").get<std::string>().find("no_such_name"), std::string::npos);
}
