#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cmdinj/extractor.hpp"
#include "cmdinj/json_io.hpp"
#include "cmdinj/testgen.hpp"

namespace cmdinj {

enum class PromptStage { Analysis, Testgen };
std::string_view to_string(PromptStage stage);

struct PromptBundle {
    std::string system_text;
    std::string user_text;
    PromptStage stage = PromptStage::Analysis;
    std::string candidate_ref;

    /// Cassette key: sha256 of system_text, a NUL byte, then user_text.
    std::string digest() const;
    bool operator==(const PromptBundle&) const = default;
};

struct ProviderConfig {
    std::string provider_id = "openai";
    std::string model_name = "gpt-4";
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    double temperature = 0.0;
    int max_output_tokens = 2048;
    double price_per_input_token = 0.0;
    double price_per_output_token = 0.0;
    bool prices_configured = false;
    double request_timeout_s = 120.0;
    int max_retries = 3;
    double backoff_initial_s = 1.0;
    int rate_limit_requests = 0;  // 0: unlimited
    double rate_limit_interval_s = 60.0;
    unsigned parallelism = 1;

    /// Environment variable holding the API key, e.g. OPENAI_API_KEY.
    std::string api_key_env() const;
};

/// Reads ProviderConfig keys from a JSON object; unknown keys are ignored.
ProviderConfig provider_config_from_json(const Json& j, ProviderConfig base = {});
Json provider_config_to_json(const ProviderConfig& cfg);

struct RawResponse {
    std::string text;
    double latency_s = 0.0;
    std::optional<std::int64_t> input_tokens;
    std::optional<std::int64_t> output_tokens;

    bool operator==(const RawResponse&) const = default;
};

struct AnalysisVerdict {
    std::string case_id;
    bool vulnerable = false;
    std::string justification;
    RawResponse raw;

    bool operator==(const AnalysisVerdict&) const = default;
};

struct ParseFailure {
    std::string case_id;
    std::string reason;
    RawResponse raw;

    bool operator==(const ParseFailure&) const = default;
};

using VerdictResult = std::variant<AnalysisVerdict, ParseFailure>;

std::string_view mimic_directive();
const std::array<std::string_view, 7>& requirement_bullets();

PromptBundle build_analysis_prompt(const CandidateFunction& c);
PromptBundle build_testgen_prompt(const CandidateFunction& c, std::string_view justification);

/// Total: every response maps to a verdict or a ParseFailure.
VerdictResult parse_verdict(const RawResponse& r, const std::string& case_id = {});

/// First ``` fenced block, else the whole text. Throws Error{NoCodeFound}.
SecurityTest parse_test_code(const RawResponse& r, const std::string& case_id = {});

Json raw_response_to_json(const RawResponse& r);
RawResponse raw_response_from_json(const Json& j);
Json verdict_to_json(const VerdictResult& v);
VerdictResult verdict_from_json(const Json& j);

// ---- providers -------------------------------------------------------------

class Provider {
public:
    virtual ~Provider() = default;
    virtual RawResponse submit(const PromptBundle& p, const ProviderConfig& cfg) = 0;
};

struct CassetteEntry {
    std::string prompt_sha256;
    std::string response;
    double latency_s = 0.0;
    std::optional<std::int64_t> input_tokens;
    std::optional<std::int64_t> output_tokens;

    bool operator==(const CassetteEntry&) const = default;
};

class Cassette {
public:
    Cassette() = default;
    explicit Cassette(std::vector<CassetteEntry> entries);

    static Cassette load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    Json to_json() const;
    static Cassette from_json(const Json& doc);

    const CassetteEntry* find(std::string_view digest) const;
    /// Replaces an existing entry with the same digest.
    void put(CassetteEntry entry);
    const std::vector<CassetteEntry>& entries() const { return entries_; }

private:
    std::vector<CassetteEntry> entries_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Serves responses from a cassette; never touches the network.
class ReplayProvider : public Provider {
public:
    explicit ReplayProvider(Cassette cassette) : cassette_(std::move(cassette)) {}
    RawResponse submit(const PromptBundle& p, const ProviderConfig& cfg) override;

private:
    Cassette cassette_;
};

/// Deterministic canned responses keyed by prompt digest.
class MockProvider : public Provider {
public:
    using Responder = std::function<std::optional<std::string>(const PromptBundle&)>;
    explicit MockProvider(std::map<std::string, std::string> by_digest, std::optional<std::string> fallback = {});
    explicit MockProvider(Responder responder) : responder_(std::move(responder)) {}
    RawResponse submit(const PromptBundle& p, const ProviderConfig& cfg) override;

private:
    Responder responder_;
};

/// Wraps another provider and appends every exchange to a cassette.
class RecordingProvider : public Provider {
public:
    explicit RecordingProvider(Provider& inner) : inner_(inner) {}
    RawResponse submit(const PromptBundle& p, const ProviderConfig& cfg) override;
    Cassette cassette() const;

private:
    Provider& inner_;
    mutable std::mutex mu_;
    Cassette cassette_;
};

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    double timeout_s = 0.0;
};

struct HttpReply {
    int status = 0;  // 0 when no HTTP response was received
    std::string body;
    std::string transport_error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpReply post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (plain http and https).
class HttplibTransport : public HttpTransport {
public:
    HttpReply post(const HttpRequest& request) override;
};

/// Token bucket shared by concurrent submitters.
class RateLimiter {
public:
    RateLimiter(int requests, double interval_s);
    void acquire();

private:
    int capacity_;
    double refill_per_s_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mu_;
};

/// OpenAI-compatible chat-completions client.
class LiveProvider : public Provider {
public:
    using Sleeper = std::function<void(double seconds)>;
    using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

    LiveProvider(std::shared_ptr<HttpTransport> transport, std::shared_ptr<RateLimiter> limiter = nullptr);
    RawResponse submit(const PromptBundle& p, const ProviderConfig& cfg) override;

    void set_sleeper(Sleeper s) { sleep_ = std::move(s); }
    void set_env_lookup(EnvLookup e) { env_ = std::move(e); }

    static Json build_payload(const PromptBundle& p, const ProviderConfig& cfg);

private:
    std::shared_ptr<HttpTransport> transport_;
    std::shared_ptr<RateLimiter> limiter_;
    Sleeper sleep_;
    EnvLookup env_;
};

}  // namespace cmdinj
