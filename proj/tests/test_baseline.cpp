#include <gtest/gtest.h>

#include "cmdinj/baseline.hpp"
#include "cmdinj/error.hpp"
#include "support/fixture_cassette.hpp"
#include "test_support.hpp"

using namespace cmdinj;

namespace {

const CandidateSet& fixture_set() {
    static const auto set = fixture::fixture_candidates(testing_support::fixtures());
    return set;
}

const CandidateFunction& by_name(const std::string& qualname) {
    for (const auto& c : fixture_set().candidates) {
        if (c.qualname == qualname) return c;
    }
    throw std::runtime_error("no candidate " + qualname);
}

std::vector<std::string> rule_ids(const CandidateFunction& c) {
    std::vector<std::string> ids;
    for (const auto& f : run_rules(c)) ids.push_back(f.rule_id);
    return ids;
}

}  // namespace

TEST(BaselineRules, OneFindingPerSinkHit) {
    EXPECT_EQ(rule_ids(by_name("get_child_pids")), (std::vector<std::string>{"R2"}));
    EXPECT_EQ(rule_ids(by_name("list_dir")), (std::vector<std::string>{"R3"}));
    EXPECT_EQ(rule_ids(by_name("load_setting")), (std::vector<std::string>{"R1"}));
    EXPECT_EQ(rule_ids(by_name("Worker.start")), (std::vector<std::string>{"R4"}));
    EXPECT_EQ(rule_ids(by_name("check_version")), (std::vector<std::string>{"R2", "R3"}));
    EXPECT_EQ(rule_ids(by_name("start_service")), (std::vector<std::string>{"R2"}));

    const auto f = run_rules(by_name("get_child_pids"));
    EXPECT_EQ(f[0].severity, Level::High);
    EXPECT_EQ(f[0].confidence, Level::High);
    EXPECT_EQ(f[0].line, 5);
    EXPECT_EQ(f[0].sink, "subprocess.Popen");
    EXPECT_EQ(finding_from_json(finding_to_json(f[0])), f[0]);
}

TEST(BaselineRules, EveryCandidateIsFlagged) {
    // each candidate holds at least one catalog sink, and every catalog entry maps to a rule
    for (const auto& c : fixture_set().candidates) EXPECT_FALSE(run_rules(c).empty()) << c.case_id;
}

TEST(BaselineRules, HitsOutsideCatalogAreIgnored) {
    const SinkCatalog small({{SinkGroup::Builtin, "eval"}});
    EXPECT_TRUE(run_rules(by_name("get_child_pids"), small).empty());
    EXPECT_EQ(run_rules(by_name("load_setting"), small).size(), 1u);
}

TEST(BaselineClassify, TruthFromLabelThenOutcome) {
    const CaseLabel vuln{"c", true, LabelSource::ManualReview};
    const CaseLabel safe{"c", false, LabelSource::ManualReview};
    ExecutionOutcome confirmed;
    confirmed.status = OutcomeStatus::Confirmed;
    ExecutionOutcome refuted;
    refuted.status = OutcomeStatus::Refuted;
    ExecutionOutcome broken;
    broken.status = OutcomeStatus::Invalid;

    EXPECT_EQ(classify_baseline("c", true, vuln, std::nullopt).kind, CaseClassKind::TP);
    EXPECT_EQ(classify_baseline("c", true, safe, confirmed).kind, CaseClassKind::FP);
    EXPECT_EQ(classify_baseline("c", true, std::nullopt, confirmed).kind, CaseClassKind::TP);
    EXPECT_EQ(classify_baseline("c", true, std::nullopt, refuted).kind, CaseClassKind::FP);
    EXPECT_EQ(classify_baseline("c", true, std::nullopt, broken).kind, CaseClassKind::Invalid);
    EXPECT_EQ(classify_baseline("c", true, std::nullopt, std::nullopt).kind, CaseClassKind::Invalid);
    EXPECT_EQ(classify_baseline("c", false, vuln, std::nullopt).kind, CaseClassKind::FN);
    EXPECT_EQ(classify_baseline("c", false, safe, std::nullopt).kind, CaseClassKind::TN);
    EXPECT_EQ(classify_baseline("c", false, std::nullopt, std::nullopt).kind, CaseClassKind::UnverifiedNegative);
}

TEST(ExternalReport, MapsFindingsIntoCandidateSpans) {
    const auto report = Json::parse(R"({"results": [
        {"filename": "./repo/alpha/procs.py", "line_number": 5, "test_id": "B602",
         "issue_severity": "HIGH", "issue_confidence": "HIGH"},
        {"filename": "alpha/shell_utils.py", "line_number": 10, "test_id": "B603",
         "issue_severity": "LOW", "issue_confidence": "HIGH"},
        {"filename": "alpha/shell_utils.py", "line_number": 1, "test_id": "B404",
         "issue_severity": "LOW", "issue_confidence": "HIGH"},
        {"filename": "other/procs.py", "line_number": 5, "test_id": "B602",
         "issue_severity": "HIGH", "issue_confidence": "HIGH"}
    ]})");
    const auto f = ingest_external_report(report, fixture_set().candidates);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(f[0].case_id, "alpha:alpha/procs.py:get_child_pids:4");
    EXPECT_EQ(f[0].rule_id, "B602");
    EXPECT_EQ(f[1].case_id, "alpha:alpha/shell_utils.py:list_dir:9");
    EXPECT_EQ(f[1].severity, Level::Low);

    const auto bare = Json::parse(R"([{"filename": "beta/spawn.py", "line": 6, "test_id": "B606",
        "issue_severity": "low", "issue_confidence": "Medium"}])");
    ASSERT_EQ(ingest_external_report(bare, fixture_set().candidates).size(), 1u);
}

TEST(ExternalReport, MalformedInput) {
    for (const char* bad : {R"({"nothing": 1})", R"({"results": 3})", R"([{"filename": "a.py"}])",
                            R"([{"filename": "a.py", "line": 1, "test_id": "B1", "issue_severity": "extreme",
                                 "issue_confidence": "high"}])"}) {
        try {
            ingest_external_report(Json::parse(bad), fixture_set().candidates);
            ADD_FAILURE() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::FormatError) << bad;
        }
    }
}
