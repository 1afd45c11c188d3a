#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lumber/backend.hpp"
#include "lumber/embedding.hpp"

namespace lumber {

/// Where a live OpenAI-compatible service lives. `base_url` includes the API
/// prefix, e.g. "https://host/v1"; requests go to base_url + "/chat/completions"
/// and base_url + "/embeddings".
struct HttpEndpoint {
    std::string base_url;
    std::string model;
    std::string api_key;  // sent as "Authorization: Bearer <key>" when non-empty
    std::size_t max_retries = 3;
    std::chrono::milliseconds timeout{120000};
    std::chrono::milliseconds backoff{1000};

    /// Reads LUMBER_API_BASE, LUMBER_API_KEY and LUMBER_MODEL. `model`, when
    /// non-empty, overrides LUMBER_MODEL.
    static HttpEndpoint from_environment(const std::string& model = {});
};

struct SplitUrl {
    std::string scheme_host_port;  // "https://host:443"
    std::string path_prefix;       // "/v1"
};

SplitUrl split_url(const std::string& url);

/// Request body for a chat completion: {"model", "messages", "temperature"}.
std::string chat_request_body(const std::string& model, std::string_view system,
                              std::string_view prompt, double temperature);
/// Extracts choices[0].message.content; throws BackendError otherwise.
std::string parse_chat_response(const std::string& body);

std::string embedding_request_body(const std::string& model, std::span<const std::string> texts);
/// Extracts data[i].embedding ordered by data[i].index.
std::vector<Vector> parse_embedding_response(const std::string& body, std::size_t expected);

class HttpChatBackend final : public CompletionBackend {
public:
    explicit HttpChatBackend(HttpEndpoint endpoint);
    std::string model_id() const override { return endpoint_.model; }

protected:
    std::string do_complete(std::string_view system, std::string_view prompt,
                            double temperature) override;

private:
    HttpEndpoint endpoint_;
};

class HttpEmbeddingBackend final : public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(HttpEndpoint endpoint);
    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::string backend_id() const override { return "http:" + endpoint_.model; }

private:
    HttpEndpoint endpoint_;
};

}  // namespace lumber
