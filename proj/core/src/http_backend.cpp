#include "lumber/http_backend.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <nlohmann/json.hpp>
#include <thread>

#include "lumber/error.hpp"

namespace lumber {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : std::move(fallback);
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

/// POSTs `body` to base_url + `path`, retrying transport errors, 429 and 5xx
/// with linear backoff.
std::string post_json(const HttpEndpoint& endpoint, const std::string& path,
                      const std::string& body) {
    if (endpoint.base_url.empty()) throw BackendError("no API base URL configured");
    SplitUrl url = split_url(endpoint.base_url);
    httplib::Client client(url.scheme_host_port);
    auto seconds = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout).count();
    client.set_connection_timeout(seconds);
    client.set_read_timeout(seconds);
    httplib::Headers headers;
    if (!endpoint.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint.api_key);

    std::string last_error;
    for (std::size_t attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(endpoint.backoff * attempt);
        auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
        if (!retryable_status(res->status)) break;
    }
    throw BackendError(endpoint.base_url + path + ": " + last_error);
}

}  // namespace

HttpEndpoint HttpEndpoint::from_environment(const std::string& model) {
    HttpEndpoint e;
    e.base_url = env_or("LUMBER_API_BASE", "");
    e.api_key = env_or("LUMBER_API_KEY", "");
    e.model = model.empty() ? env_or("LUMBER_MODEL", "") : model;
    return e;
}

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("URL lacks a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.scheme_host_port = url;
    } else {
        out.scheme_host_port = url.substr(0, path_start);
        out.path_prefix = url.substr(path_start);
    }
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

std::string chat_request_body(const std::string& model, std::string_view system,
                              std::string_view prompt, double temperature) {
    nlohmann::ordered_json body;
    body["model"] = model;
    body["messages"] = nlohmann::ordered_json::array();
    if (!system.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", std::string(system)}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", std::string(prompt)}});
    body["temperature"] = temperature;
    return body.dump();
}

std::string parse_chat_response(const std::string& body) {
    try {
        auto json = nlohmann::json::parse(body);
        return json.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected chat response: ") + e.what());
    }
}

std::string embedding_request_body(const std::string& model, std::span<const std::string> texts) {
    nlohmann::ordered_json body;
    body["model"] = model;
    body["input"] = nlohmann::ordered_json::array();
    for (const auto& t : texts) body["input"].push_back(t);
    return body.dump();
}

std::vector<Vector> parse_embedding_response(const std::string& body, std::size_t expected) {
    try {
        auto json = nlohmann::json::parse(body);
        const auto& data = json.at("data");
        std::vector<Vector> out(expected);
        std::size_t seen = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::size_t index = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
            if (index >= expected) throw BackendError("embedding index out of range");
            out[index] = data[i].at("embedding").get<Vector>();
            normalize(out[index]);
            ++seen;
        }
        if (seen != expected) {
            throw BackendError("expected " + std::to_string(expected) + " embeddings, got " +
                               std::to_string(seen));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected embedding response: ") + e.what());
    }
}

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpChatBackend::do_complete(std::string_view system, std::string_view prompt,
                                         double temperature) {
    return parse_chat_response(post_json(endpoint_, "/chat/completions",
                                         chat_request_body(endpoint_.model, system, prompt, temperature)));
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::vector<Vector> HttpEmbeddingBackend::embed(std::span<const std::string> texts) {
    if (texts.empty()) return {};
    return parse_embedding_response(
        post_json(endpoint_, "/embeddings", embedding_request_body(endpoint_.model, texts)),
        texts.size());
}

}  // namespace lumber
