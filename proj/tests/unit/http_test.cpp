#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <gtest/gtest.h>

#include <atomic>
#include <nlohmann/json.hpp>
#include <thread>

#include "lumber/error.hpp"
#include "lumber/http_backend.hpp"

using namespace lumber;
using json = nlohmann::json;

namespace {

/// Local stand-in for an OpenAI-compatible service.
class FakeService {
public:
    FakeService() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            if (++chat_calls <= failures_before_success) {
                res.status = 503;
                res.set_content("busy", "text/plain");
                return;
            }
            json body = json::parse(req.body);
            std::string prompt = body["messages"].back()["content"];
            json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo:" + prompt}}}}}}};
            res.set_content(reply.dump(), "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            json body = json::parse(req.body);
            json data = json::array();
            // Reverse order with explicit indices to exercise reordering.
            for (std::size_t i = body["input"].size(); i-- > 0;) {
                data.push_back({{"index", i}, {"embedding", {3.0 * (i + 1), 4.0 * (i + 1)}}});
            }
            res.set_content(json{{"data", data}}.dump(), "application/json");
        });
        server_.Post("/v1/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
            res.status = 401;
            res.set_content("unauthorized", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }

    HttpEndpoint endpoint(const std::string& prefix = "/v1") const {
        HttpEndpoint e;
        e.base_url = "http://127.0.0.1:" + std::to_string(port_) + prefix;
        e.model = "test-model";
        e.api_key = "secret";
        e.backoff = std::chrono::milliseconds(1);
        e.timeout = std::chrono::milliseconds(5000);
        return e;
    }

    std::atomic<int> chat_calls{0};
    int failures_before_success = 0;
    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(HttpMapping, SplitUrl) {
    SplitUrl a = split_url("https://api.example.com/v1");
    EXPECT_EQ(a.scheme_host_port, "https://api.example.com");
    EXPECT_EQ(a.path_prefix, "/v1");
    SplitUrl b = split_url("http://localhost:8080");
    EXPECT_EQ(b.scheme_host_port, "http://localhost:8080");
    EXPECT_EQ(b.path_prefix, "");
    EXPECT_EQ(split_url("http://h/v1/").path_prefix, "/v1");
    EXPECT_THROW(split_url("localhost"), std::invalid_argument);
}

TEST(HttpMapping, ChatBodies) {
    json body = json::parse(chat_request_body("m", "sys", "hello", 0.0));
    EXPECT_EQ(body["model"], "m");
    EXPECT_EQ(body["temperature"], 0.0);
    ASSERT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_EQ(body["messages"][1]["content"], "hello");
    EXPECT_EQ(json::parse(chat_request_body("m", "", "p", 0.0))["messages"].size(), 1u);

    EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
    EXPECT_THROW(parse_chat_response(R"({"choices":[]})"), BackendError);
    EXPECT_THROW(parse_chat_response("not json"), BackendError);
}

TEST(HttpMapping, EmbeddingBodies) {
    std::vector<std::string> texts = {"a", "b"};
    json body = json::parse(embedding_request_body("e", texts));
    EXPECT_EQ(body["model"], "e");
    EXPECT_EQ(body["input"].size(), 2u);
    auto vs = parse_embedding_response(
        R"({"data":[{"index":1,"embedding":[0,2]},{"index":0,"embedding":[3,4]}]})", 2);
    ASSERT_EQ(vs.size(), 2u);
    EXPECT_FLOAT_EQ(vs[0][0], 0.6f);
    EXPECT_FLOAT_EQ(vs[1][1], 1.0f);
    EXPECT_THROW(parse_embedding_response(R"({"data":[]})", 1), BackendError);
}

TEST(HttpMapping, EndpointFromEnvironment) {
    setenv("LUMBER_API_BASE", "http://x/v1", 1);
    setenv("LUMBER_API_KEY", "k", 1);
    setenv("LUMBER_MODEL", "env-model", 1);
    HttpEndpoint e = HttpEndpoint::from_environment();
    EXPECT_EQ(e.base_url, "http://x/v1");
    EXPECT_EQ(e.api_key, "k");
    EXPECT_EQ(e.model, "env-model");
    EXPECT_EQ(HttpEndpoint::from_environment("override").model, "override");
    unsetenv("LUMBER_API_BASE");
    unsetenv("LUMBER_API_KEY");
    unsetenv("LUMBER_MODEL");
}

TEST(HttpBackend, ChatRoundTripWithRetries) {
    FakeService service;
    service.failures_before_success = 2;
    HttpChatBackend backend(service.endpoint());
    EXPECT_EQ(backend.complete("sys", "ping", 0.0), "echo:ping");
    EXPECT_EQ(service.chat_calls.load(), 3);
    EXPECT_EQ(service.last_auth, "Bearer secret");
    EXPECT_EQ(json::parse(service.last_body)["model"], "test-model");
    EXPECT_EQ(backend.model_id(), "test-model");
}

TEST(HttpBackend, GivesUpAfterRetryBudget) {
    FakeService service;
    service.failures_before_success = 100;
    HttpEndpoint e = service.endpoint();
    e.max_retries = 1;
    HttpChatBackend backend(e);
    EXPECT_THROW(backend.complete("ping", 0.0), BackendError);
    EXPECT_EQ(service.chat_calls.load(), 2);
}

TEST(HttpBackend, ClientErrorsAreNotRetried) {
    FakeService service;
    HttpChatBackend backend(service.endpoint("/v1/bad"));
    try {
        backend.complete("ping", 0.0);
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("401"), std::string::npos);
    }
}

TEST(HttpBackend, UnreachableHost) {
    HttpEndpoint e;
    e.base_url = "http://127.0.0.1:1";
    e.max_retries = 0;
    e.timeout = std::chrono::milliseconds(1000);
    HttpChatBackend backend(e);
    EXPECT_THROW(backend.complete("ping", 0.0), BackendError);
}

TEST(HttpBackend, EmbeddingsAreNormalizedAndOrdered) {
    FakeService service;
    HttpEmbeddingBackend backend(service.endpoint());
    std::vector<std::string> texts = {"a", "b", "c"};
    auto vs = backend.embed(texts);
    ASSERT_EQ(vs.size(), 3u);
    for (const auto& v : vs) {
        EXPECT_FLOAT_EQ(v[0], 0.6f);
        EXPECT_FLOAT_EQ(v[1], 0.8f);
    }
    EXPECT_EQ(backend.backend_id(), "http:test-model");
}
