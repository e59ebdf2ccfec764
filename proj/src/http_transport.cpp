#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <regex>

#include "cmdinj/error.hpp"
#include "cmdinj/llm.hpp"

namespace cmdinj {

HttpReply HttplibTransport::post(const HttpRequest& request) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(request.url, m, url_re)) throw Error(ErrorCode::InvalidArgument, "bad endpoint URL: " + request.url);
    httplib::Client client(m[1].str());
    const auto secs = static_cast<time_t>(request.timeout_s);
    const auto usecs = static_cast<time_t>((request.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") {
            content_type = v;
        } else {
            headers.emplace(k, v);
        }
    }
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = client.Post(path, headers, request.body, content_type);
    HttpReply reply;
    if (!res) {
        reply.transport_error = httplib::to_string(res.error());
        return reply;
    }
    reply.status = res->status;
    reply.body = res->body;
    return reply;
}

}  // namespace cmdinj
