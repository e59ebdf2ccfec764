#pragma once
// Builds the replay cassette for the fixture corpus from the hand-written
// responses under fixtures/responses. The checked-in cassette must equal the
// output of this function.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cmdinj/corpus.hpp"
#include "cmdinj/extractor.hpp"
#include "cmdinj/llm.hpp"

namespace fixture {

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline cmdinj::CandidateSet fixture_candidates(const std::filesystem::path& fixtures) {
    auto manifest = cmdinj::scan_repo(fixtures / "corpus");
    cmdinj::ExtractOptions opt;
    opt.project_per_top_dir = true;
    return cmdinj::extract_corpus(manifest, cmdinj::SinkCatalog::builtin_default(), opt);
}

inline cmdinj::CassetteEntry entry_for(const cmdinj::PromptBundle& prompt, const cmdinj::Json& spec,
                                       const std::filesystem::path& dir) {
    cmdinj::CassetteEntry e;
    e.prompt_sha256 = prompt.digest();
    e.response = slurp(dir / spec.at("text").get<std::string>());
    e.latency_s = spec.at("latency_s").get<double>();
    e.input_tokens = spec.at("input_tokens").get<std::int64_t>();
    e.output_tokens = spec.at("output_tokens").get<std::int64_t>();
    return e;
}

inline cmdinj::Cassette build_cassette(const std::filesystem::path& fixtures) {
    const auto dir = fixtures / "responses";
    const auto meta = cmdinj::Json::parse(slurp(dir / "meta.json"));
    const auto set = fixture_candidates(fixtures);
    cmdinj::Cassette cassette;
    for (const auto& item : meta.at("cases")) {
        const auto file = item.at("file").get<std::string>();
        const auto qualname = item.at("qualname").get<std::string>();
        const cmdinj::CandidateFunction* c = nullptr;
        for (const auto& cand : set.candidates) {
            if (cand.file == file && cand.qualname == qualname) c = &cand;
        }
        if (!c) throw std::runtime_error("no candidate for " + file + " " + qualname);
        auto analysis = entry_for(cmdinj::build_analysis_prompt(*c), item.at("analysis"), dir);
        cassette.put(analysis);
        if (item.contains("testgen")) {
            cmdinj::RawResponse raw{analysis.response, analysis.latency_s, analysis.input_tokens,
                                    analysis.output_tokens};
            auto verdict = cmdinj::parse_verdict(raw, c->case_id);
            const auto* v = std::get_if<cmdinj::AnalysisVerdict>(&verdict);
            if (!v || !v->vulnerable) throw std::runtime_error("testgen response for a non-Yes case " + qualname);
            cassette.put(entry_for(cmdinj::build_testgen_prompt(*c, v->justification), item.at("testgen"), dir));
        }
    }
    return cassette;
}

}  // namespace fixture
