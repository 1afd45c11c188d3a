#include <gtest/gtest.h>

#include <thread>

#include "lumber/backend.hpp"
#include "lumber/chunker.hpp"
#include "lumber/error.hpp"
#include "test_support.hpp"

using namespace lumber;
using namespace lumber::testing;

TEST(PromptHash, SystemPromptIsPartOfKey) {
    EXPECT_EQ(prompt_hash("", "abc"), prompt_hash("", "abc"));
    EXPECT_NE(prompt_hash("", "abc"), prompt_hash("a", "bc"));
    EXPECT_NE(prompt_hash("sys", "p"), prompt_hash("", "p"));
    EXPECT_EQ(prompt_hash("", "").size(), 64u);
}

TEST(ScriptedBackend, DeterministicAndCounted) {
    ScriptedBackend b([](std::string_view s, std::string_view p) {
        return std::string(s) + "|" + std::string(p);
    });
    EXPECT_EQ(b.complete("sys", "x", 0.0), "sys|x");
    EXPECT_EQ(b.complete("x", 0.0), "|x");
    EXPECT_EQ(b.calls(), 2u);
    EXPECT_EQ(b.model_id(), "scripted");
}

TEST(ResponseCache, PersistsAsJsonLines) {
    TempDir dir;
    {
        ResponseCache cache(dir / "c.jsonl");
        cache.store("m", "h1", "first\nline");
        cache.store("m", "h2", "second");
    }
    std::string content = slurp(dir / "c.jsonl");
    EXPECT_EQ(content.substr(0, content.find('\n')),
              R"({"model":"m","prompt_hash":"h1","response":"first\nline"})");
    ResponseCache reloaded(dir / "c.jsonl");
    EXPECT_EQ(reloaded.size(), 2u);
    EXPECT_EQ(reloaded.lookup("m", "h1"), "first\nline");
    EXPECT_FALSE(reloaded.lookup("other", "h1"));
}

TEST(ResponseCache, MalformedLineReportsLineNumber) {
    TempDir dir;
    std::ofstream(dir / "c.jsonl") << R"({"model":"m","prompt_hash":"h","response":"r"})" << "\nnot json\n";
    try {
        ResponseCache cache(dir / "c.jsonl");
        FAIL() << "expected MalformedRecordError";
    } catch (const MalformedRecordError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ResponseCache, ConcurrentWritersNeverInterleave) {
    TempDir dir;
    {
        ResponseCache cache(dir / "c.jsonl");
        std::vector<std::thread> threads;
        for (int t = 0; t < 8; ++t) {
            threads.emplace_back([&, t] {
                for (int i = 0; i < 50; ++i) {
                    cache.store("m", std::to_string(t) + ":" + std::to_string(i),
                                std::string(200, static_cast<char>('a' + t)));
                }
            });
        }
        for (auto& th : threads) th.join();
    }
    ResponseCache reloaded(dir / "c.jsonl");
    EXPECT_EQ(reloaded.size(), 400u);
    EXPECT_EQ(reloaded.lookup("m", "3:17"), std::string(200, 'd'));
}

TEST(CachingBackend, MissesThenHits) {
    ScriptedBackend inner([](std::string_view, std::string_view p) { return "re:" + std::string(p); });
    ResponseCache cache;
    CachingBackend caching(inner, cache);
    EXPECT_EQ(caching.complete("q", 0.0), "re:q");
    EXPECT_EQ(caching.complete("q", 0.0), "re:q");
    EXPECT_EQ(caching.complete("s", "q", 0.0), "re:q");
    EXPECT_EQ(inner.calls(), 2u);
    EXPECT_EQ(caching.hits(), 1u);
    EXPECT_EQ(caching.misses(), 2u);
}

TEST(ReplayBackend, ServesCachedAndRejectsMisses) {
    TempDir dir;
    {
        ResponseCache cache(dir / "c.jsonl");
        cache.store("model-x", prompt_hash("", "hello"), "world");
    }
    ReplayBackend replay(dir / "c.jsonl", "model-x");
    EXPECT_EQ(replay.complete("hello", 0.0), "world");
    EXPECT_THROW(replay.complete("other", 0.0), BackendError);
    ReplayBackend wrong_model(dir / "c.jsonl", "model-y");
    EXPECT_THROW(wrong_model.complete("hello", 0.0), BackendError);
    EXPECT_THROW(ReplayBackend(dir / "missing.jsonl", "m"), BackendError);
    // Replay never writes to the file.
    const std::string content = slurp(dir / "c.jsonl");
    EXPECT_EQ(std::count(content.begin(), content.end(), '\n'), 1);
}

TEST(ReplayBackend, ReproducesRecordedChunking) {
    TempDir dir;
    Document doc = document_of_words({120, 200, 90, 300, 150, 60, 220, 80});
    auto live = ScriptedBackend::from_prompt(
        [](std::string_view prompt) { return answer_id(prompt_ids(prompt)[1]); }, "m");
    std::string recorded;
    {
        ResponseCache cache(dir / "c.jsonl");
        CachingBackend caching(*live, cache);
        recorded = chunk_records(lumberchunk(doc, ChunkerConfig{}, caching));
    }
    ReplayBackend replay(dir / "c.jsonl", "m");
    EXPECT_EQ(chunk_records(lumberchunk(doc, ChunkerConfig{}, replay)), recorded);
}

TEST(WithRetries, RetriesBackendErrorsOnly) {
    int calls = 0;
    int result = with_retries(2, [&] {
        if (++calls < 3) throw BackendError("flaky");
        return 7;
    });
    EXPECT_EQ(result, 7);
    EXPECT_EQ(calls, 3);

    calls = 0;
    EXPECT_THROW(with_retries(2, [&]() -> int {
                     ++calls;
                     throw BackendError("down");
                 }),
                 BackendError);
    EXPECT_EQ(calls, 3);

    calls = 0;
    EXPECT_THROW(with_retries(5, [&]() -> int {
                     ++calls;
                     throw ParseError("bad");
                 }),
                 ParseError);
    EXPECT_EQ(calls, 1);
}
