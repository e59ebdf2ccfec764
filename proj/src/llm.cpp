#include "cmdinj/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

#include "cmdinj/digest.hpp"
#include "cmdinj/error.hpp"

namespace cmdinj {

namespace {

constexpr std::string_view kMimic =
    "Before you reply, work through the question below 10 times in the background, "
    "each time as an independent attempt, then return only the single answer you judge to be the most accurate.";

constexpr std::array<std::string_view, 7> kBullets{
    "Include the source function being tested without modifying its name or content.",
    "Perform a command injection test, if there are methods in the function that would lead to a command injection "
    "attack. Generate an os command as its input to do the test. For example, create a test file and then attempt a "
    "command injection to delete it.",
    "Set the assertion section to verify if the command is executed successfully.",
    "Only generate the code; do not provide textual descriptions or suggestions.",
    "Use the unittest library, but avoid using mock modules or other simulation objects.",
    "Import any necessary libraries to run the code.",
    "Avoid redefining subprocess.call, subprocess.run, exec, or other methods in the test code.",
};

std::string fenced_source(const std::string& source) {
    std::string out = "```python\n" + source;
    if (out.back() != '\n') out += '\n';
    return out + "```\n";
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

Json optional_int(const std::optional<std::int64_t>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<std::int64_t> read_optional_int(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::int64_t>();
}

}  // namespace

std::string_view to_string(PromptStage stage) { return stage == PromptStage::Analysis ? "analysis" : "testgen"; }

std::string PromptBundle::digest() const {
    std::string buf = system_text;
    buf.push_back('\0');
    buf += user_text;
    return sha256_hex(buf);
}

std::string ProviderConfig::api_key_env() const {
    std::string name;
    for (char c : provider_id) {
        name.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : '_');
    }
    return name + "_API_KEY";
}

ProviderConfig provider_config_from_json(const Json& j, ProviderConfig cfg) {
    if (!j.is_object()) throw Error(ErrorCode::FormatError, "provider config must be a JSON object");
    try {
        if (j.contains("provider_id")) cfg.provider_id = j.at("provider_id").get<std::string>();
        if (j.contains("model_name")) cfg.model_name = j.at("model_name").get<std::string>();
        if (j.contains("endpoint")) cfg.endpoint = j.at("endpoint").get<std::string>();
        if (j.contains("temperature")) cfg.temperature = j.at("temperature").get<double>();
        if (j.contains("max_output_tokens")) cfg.max_output_tokens = j.at("max_output_tokens").get<int>();
        if (j.contains("price_per_input_token")) {
            cfg.price_per_input_token = j.at("price_per_input_token").get<double>();
            cfg.prices_configured = true;
        }
        if (j.contains("price_per_output_token")) {
            cfg.price_per_output_token = j.at("price_per_output_token").get<double>();
            cfg.prices_configured = true;
        }
        if (j.contains("request_timeout_s")) cfg.request_timeout_s = j.at("request_timeout_s").get<double>();
        if (j.contains("max_retries")) cfg.max_retries = j.at("max_retries").get<int>();
        if (j.contains("backoff_initial_s")) cfg.backoff_initial_s = j.at("backoff_initial_s").get<double>();
        if (j.contains("rate_limit_requests")) cfg.rate_limit_requests = j.at("rate_limit_requests").get<int>();
        if (j.contains("rate_limit_interval_s")) cfg.rate_limit_interval_s = j.at("rate_limit_interval_s").get<double>();
        if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<unsigned>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("provider config: ") + e.what());
    }
    if (cfg.price_per_input_token < 0 || cfg.price_per_output_token < 0) {
        throw Error(ErrorCode::InvalidArgument, "prices must be >= 0");
    }
    if (cfg.max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 0");
    return cfg;
}

Json provider_config_to_json(const ProviderConfig& cfg) {
    Json j;
    j["provider_id"] = cfg.provider_id;
    j["model_name"] = cfg.model_name;
    j["endpoint"] = cfg.endpoint;
    j["temperature"] = cfg.temperature;
    j["max_output_tokens"] = cfg.max_output_tokens;
    if (cfg.prices_configured) {
        j["price_per_input_token"] = cfg.price_per_input_token;
        j["price_per_output_token"] = cfg.price_per_output_token;
    }
    j["request_timeout_s"] = cfg.request_timeout_s;
    j["max_retries"] = cfg.max_retries;
    j["backoff_initial_s"] = cfg.backoff_initial_s;
    j["rate_limit_requests"] = cfg.rate_limit_requests;
    j["rate_limit_interval_s"] = cfg.rate_limit_interval_s;
    j["parallelism"] = cfg.parallelism;
    return j;
}

std::string_view mimic_directive() { return kMimic; }

const std::array<std::string_view, 7>& requirement_bullets() { return kBullets; }

PromptBundle build_analysis_prompt(const CandidateFunction& c) {
    PromptBundle p;
    p.stage = PromptStage::Analysis;
    p.candidate_ref = c.case_id;
    p.system_text = std::string(
                        "You are a security reviewer who audits Python code for OS command injection.\n") +
                    std::string(kMimic) +
                    "\n"
                    "Reply format: the first line must be exactly \"VERDICT: Yes\" or \"VERDICT: No\". "
                    "After a Yes, explain on the following lines which input reaches which command execution call "
                    "and how an attacker would control it.\n";
    p.user_text = "Is the following Python function vulnerable to command injection?\n\n" + fenced_source(c.source_text);
    return p;
}

PromptBundle build_testgen_prompt(const CandidateFunction& c, std::string_view justification) {
    PromptBundle p;
    p.stage = PromptStage::Testgen;
    p.candidate_ref = c.case_id;
    p.system_text =
        "You are a security engineer who writes Python unit tests that demonstrate command injection by running "
        "a real injected command.\n";
    std::string u = "Function under test:\n\n" + fenced_source(c.source_text);
    u += "\nReason it was judged vulnerable:\n";
    u += justification;
    if (!justification.empty() && justification.back() != '\n') u += '\n';
    u += "\nWrite a security test for this function that follows these requirements:\n";
    for (const auto& b : kBullets) {
        u += "- ";
        u += b;
        u += '\n';
    }
    u += "\nThe test runs from a scratch directory that already contains a file named ";
    u += kSentinelFileName;
    u += "; use it as the file the injected command deletes.\n";
    p.user_text = std::move(u);
    return p;
}

VerdictResult parse_verdict(const RawResponse& r, const std::string& case_id) {
    static const std::regex head(R"(^\s*VERDICT\s*:\s*(.*)$)", std::regex::icase);
    static const std::regex answer(R"(^(yes|no)\b[\s.:,;-]*(.*)$)", std::regex::icase);
    const auto lines = split_lines(r.text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line(lines[i]);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        if (!std::regex_match(line, m, head)) continue;
        std::string rest = m[1];
        std::smatch a;
        if (!std::regex_match(rest, a, answer)) {
            return ParseFailure{case_id, "VERDICT line is neither Yes nor No", r};
        }
        std::string word = a[1];
        std::transform(word.begin(), word.end(), word.begin(), [](unsigned char ch) { return std::tolower(ch); });
        std::string justification = a[2];
        for (std::size_t k = i + 1; k < lines.size(); ++k) {
            justification += '\n';
            justification += lines[k];
        }
        justification = trim(justification);
        const bool vulnerable = word == "yes";
        if (vulnerable && justification.empty()) {
            return ParseFailure{case_id, "Yes verdict without justification", r};
        }
        return AnalysisVerdict{case_id, vulnerable, justification, r};
    }
    return ParseFailure{case_id, "no VERDICT line", r};
}

SecurityTest parse_test_code(const RawResponse& r, const std::string& case_id) {
    SecurityTest t;
    t.case_id = case_id;
    const auto lines = split_lines(r.text);
    std::optional<std::size_t> open;
    std::string body;
    int extra_blocks = 0;
    bool closed = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.rfind("```", 0) != 0) {
            if (open && !closed) {
                body += lines[i];
                body += '\n';
            }
            continue;
        }
        if (!open) {
            open = i;
        } else if (!closed) {
            closed = true;
        } else {
            ++extra_blocks;  // counts both fences of every later block
        }
    }
    if (open) {
        t.extraction_method = "fenced";
        if (!closed) t.warnings.push_back("unterminated code fence");
        if (extra_blocks > 0) {
            t.warnings.push_back(std::to_string((extra_blocks + 1) / 2) + " additional code block(s) ignored");
        }
    } else {
        t.extraction_method = "unfenced";
        body = r.text;
    }
    if (trim(body).empty()) throw Error(ErrorCode::NoCodeFound, "response contains no code" + (case_id.empty() ? "" : " for " + case_id));
    // strip leading blank lines and keep exactly one trailing newline
    const auto first = body.find_first_not_of("\r\n");
    body = body.substr(first);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r' || body.back() == ' ' || body.back() == '\t')) {
        body.pop_back();
    }
    body += '\n';
    t.original_code = body;
    t.normalized_code = body;
    return t;
}

Json raw_response_to_json(const RawResponse& r) {
    Json j;
    j["text"] = r.text;
    j["latency_s"] = r.latency_s;
    j["input_tokens"] = optional_int(r.input_tokens);
    j["output_tokens"] = optional_int(r.output_tokens);
    return j;
}

RawResponse raw_response_from_json(const Json& j) {
    RawResponse r;
    r.text = j.at("text").get<std::string>();
    r.latency_s = j.at("latency_s").get<double>();
    r.input_tokens = read_optional_int(j, "input_tokens");
    r.output_tokens = read_optional_int(j, "output_tokens");
    return r;
}

Json verdict_to_json(const VerdictResult& v) {
    Json j;
    if (const auto* a = std::get_if<AnalysisVerdict>(&v)) {
        j["case_id"] = a->case_id;
        j["status"] = "verdict";
        j["vulnerable"] = a->vulnerable;
        j["justification"] = a->justification;
        j["raw"] = raw_response_to_json(a->raw);
    } else {
        const auto& f = std::get<ParseFailure>(v);
        j["case_id"] = f.case_id;
        j["status"] = "parse_failure";
        j["reason"] = f.reason;
        j["raw"] = raw_response_to_json(f.raw);
    }
    return j;
}

VerdictResult verdict_from_json(const Json& j) {
    try {
        const auto status = j.at("status").get<std::string>();
        if (status == "verdict") {
            return AnalysisVerdict{j.at("case_id").get<std::string>(), j.at("vulnerable").get<bool>(),
                                   j.at("justification").get<std::string>(), raw_response_from_json(j.at("raw"))};
        }
        if (status == "parse_failure") {
            return ParseFailure{j.at("case_id").get<std::string>(), j.at("reason").get<std::string>(),
                                raw_response_from_json(j.at("raw"))};
        }
        throw Error(ErrorCode::FormatError, "unknown verdict status: " + status);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("verdict record: ") + e.what());
    }
}

// ---- cassette ----------------------------------------------------------------

Cassette::Cassette(std::vector<CassetteEntry> entries) {
    for (auto& e : entries) put(std::move(e));
}

const CassetteEntry* Cassette::find(std::string_view digest) const {
    const auto it = index_.find(digest);
    return it == index_.end() ? nullptr : &entries_[it->second];
}

void Cassette::put(CassetteEntry entry) {
    const auto it = index_.find(entry.prompt_sha256);
    if (it != index_.end()) {
        entries_[it->second] = std::move(entry);
        return;
    }
    index_.emplace(entry.prompt_sha256, entries_.size());
    entries_.push_back(std::move(entry));
}

Json Cassette::to_json() const {
    Json doc = Json::array();
    for (const auto& e : entries_) {
        Json j;
        j["prompt_sha256"] = e.prompt_sha256;
        j["response"] = e.response;
        j["latency_s"] = e.latency_s;
        j["input_tokens"] = optional_int(e.input_tokens);
        j["output_tokens"] = optional_int(e.output_tokens);
        doc.push_back(std::move(j));
    }
    return doc;
}

Cassette Cassette::from_json(const Json& doc) {
    if (!doc.is_array()) throw Error(ErrorCode::FormatError, "cassette must be a JSON array");
    Cassette c;
    try {
        for (const auto& j : doc) {
            CassetteEntry e;
            e.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
            e.response = j.at("response").get<std::string>();
            e.latency_s = j.at("latency_s").get<double>();
            e.input_tokens = read_optional_int(j, "input_tokens");
            e.output_tokens = read_optional_int(j, "output_tokens");
            if (e.latency_s < 0) throw Error(ErrorCode::FormatError, "negative latency in cassette");
            c.put(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("cassette entry: ") + e.what());
    }
    return c;
}

Cassette Cassette::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

void Cassette::save(const std::filesystem::path& path) const { write_json_file(path, to_json()); }

RawResponse ReplayProvider::submit(const PromptBundle& p, const ProviderConfig&) {
    const auto digest = p.digest();
    const auto* e = cassette_.find(digest);
    if (!e) {
        throw Error(ErrorCode::CassetteMiss,
                    std::string(to_string(p.stage)) + " prompt for " + p.candidate_ref + " (sha256 " + digest + ")");
    }
    return RawResponse{e->response, e->latency_s, e->input_tokens, e->output_tokens};
}

MockProvider::MockProvider(std::map<std::string, std::string> by_digest, std::optional<std::string> fallback)
    : responder_([map = std::move(by_digest), fallback = std::move(fallback)](const PromptBundle& p) -> std::optional<std::string> {
          const auto it = map.find(p.digest());
          if (it != map.end()) return it->second;
          return fallback;
      }) {}

RawResponse MockProvider::submit(const PromptBundle& p, const ProviderConfig&) {
    auto text = responder_(p);
    if (!text) throw Error(ErrorCode::CassetteMiss, "no canned response for " + p.candidate_ref);
    return RawResponse{std::move(*text), 0.0, std::nullopt, std::nullopt};
}

RawResponse RecordingProvider::submit(const PromptBundle& p, const ProviderConfig& cfg) {
    auto r = inner_.submit(p, cfg);
    std::lock_guard lock(mu_);
    cassette_.put({p.digest(), r.text, r.latency_s, r.input_tokens, r.output_tokens});
    return r;
}

Cassette RecordingProvider::cassette() const {
    std::lock_guard lock(mu_);
    return cassette_;
}

// ---- live ----------------------------------------------------------------------

RateLimiter::RateLimiter(int requests, double interval_s)
    : capacity_(requests),
      refill_per_s_(requests > 0 && interval_s > 0 ? requests / interval_s : 0.0),
      tokens_(requests),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (capacity_ <= 0 || refill_per_s_ <= 0) return;
    std::unique_lock lock(mu_);
    for (;;) {
        const auto now = std::chrono::steady_clock::now();
        tokens_ = std::min<double>(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * refill_per_s_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / refill_per_s_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

LiveProvider::LiveProvider(std::shared_ptr<HttpTransport> transport, std::shared_ptr<RateLimiter> limiter)
    : transport_(std::move(transport)),
      limiter_(std::move(limiter)),
      sleep_([](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); }),
      env_([](const std::string& name) -> std::optional<std::string> {
          const char* v = std::getenv(name.c_str());
          if (!v || !*v) return std::nullopt;
          return std::string(v);
      }) {}

Json LiveProvider::build_payload(const PromptBundle& p, const ProviderConfig& cfg) {
    Json j;
    j["model"] = cfg.model_name;
    j["temperature"] = cfg.temperature;
    j["max_tokens"] = cfg.max_output_tokens;
    j["messages"] = Json::array({Json{{"role", "system"}, {"content", p.system_text}},
                                 Json{{"role", "user"}, {"content", p.user_text}}});
    return j;
}

RawResponse LiveProvider::submit(const PromptBundle& p, const ProviderConfig& cfg) {
    const auto key = env_(cfg.api_key_env());
    if (!key) throw Error(ErrorCode::ProviderRejected, "API key not set in " + cfg.api_key_env());

    HttpRequest req;
    req.url = cfg.endpoint;
    req.headers = {{"Authorization", "Bearer " + *key}, {"Content-Type", "application/json"}};
    req.body = build_payload(p, cfg).dump();
    req.timeout_s = cfg.request_timeout_s;

    std::string last_problem;
    bool last_was_quota = false;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) sleep_(cfg.backoff_initial_s * std::pow(2.0, attempt - 1));
        if (limiter_) limiter_->acquire();
        const auto t0 = std::chrono::steady_clock::now();
        const auto reply = transport_->post(req);
        const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        if (reply.status == 200) {
            try {
                const auto doc = Json::parse(reply.body);
                RawResponse r;
                r.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
                r.latency_s = latency;
                if (doc.contains("usage") && doc["usage"].is_object()) {
                    r.input_tokens = read_optional_int(doc["usage"], "prompt_tokens");
                    r.output_tokens = read_optional_int(doc["usage"], "completion_tokens");
                }
                return r;
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::ProviderRejected, std::string("malformed provider reply: ") + e.what());
            }
        }
        if (reply.status == 401 || reply.status == 403 || reply.status == 400 || reply.status == 404) {
            throw Error(ErrorCode::ProviderRejected, "HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 300));
        }
        last_was_quota = reply.status == 429;
        last_problem = reply.status == 0 ? reply.transport_error : "HTTP " + std::to_string(reply.status);
    }
    if (last_was_quota) throw Error(ErrorCode::ProviderRejected, "rate limited or out of quota after retries");
    throw Error(ErrorCode::ProviderTimeout,
                "no usable reply after " + std::to_string(cfg.max_retries + 1) + " attempts: " + last_problem);
}

}  // namespace cmdinj
