#include <gtest/gtest.h>

#include <random>
#include <set>

#include "lumber/error.hpp"
#include "lumber/ragpipe.hpp"
#include "lumber/tokens.hpp"
#include "test_support.hpp"

using namespace lumber;
using namespace lumber::testing;

namespace {

std::vector<std::size_t> range(std::size_t first, std::size_t last) {
    std::vector<std::size_t> out;
    for (std::size_t i = first; i <= last; ++i) out.push_back(i);
    return out;
}

class ThrowingDetector final : public MentionDetector {
public:
    std::vector<std::string> mentions(std::string_view) override { throw BackendError("down"); }
};

std::size_t count_numbered(std::string_view prompt) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < 50; ++i) {
        if (prompt.find("[" + std::to_string(i) + "] ") != std::string_view::npos) ++n;
    }
    return n;
}

}  // namespace

TEST(DetectMentions, WorkedExamples) {
    RoutingDecision named = detect_mentions("What did Joshua Haldeman study?");
    EXPECT_TRUE(named.mentions_found);
    EXPECT_EQ(named.mention_strings, std::vector<std::string>{"Joshua Haldeman"});
    EXPECT_EQ(named.bm25_k, 3u);

    RoutingDecision lower = detect_mentions("what happened next?");
    EXPECT_FALSE(lower.mentions_found);
    EXPECT_EQ(lower.bm25_k, 1u);

    RoutingDecision pronoun = detect_mentions("Where was he born?");
    EXPECT_FALSE(pronoun.mentions_found);
    EXPECT_EQ(pronoun.bm25_k, 1u);
}

TEST(DetectMentions, HeuristicDetails) {
    CapitalizationDetector d;
    EXPECT_EQ(d.mentions("Why did Martha's brother sail?"), std::vector<std::string>{"Martha"});
    EXPECT_EQ(d.mentions("Doctor Penn arrived. Then Elias left."),
              (std::vector<std::string>{"Doctor Penn", "Elias"}));
    EXPECT_EQ(d.mentions("How did the Great Storm end, and who saw Wexmoor?"),
              (std::vector<std::string>{"Great Storm", "Wexmoor"}));
    EXPECT_TRUE(d.mentions("Did I see it?").empty());
}

TEST(DetectMentions, FailureMeansNoMentions) {
    ThrowingDetector failing;
    RoutingDecision r = detect_mentions("Who is Penn?", failing);
    EXPECT_FALSE(r.mentions_found);
    EXPECT_EQ(r.bm25_k, 1u);
}

TEST(DetectMentions, LlmDetector) {
    ScriptedBackend backend([](std::string_view, std::string_view prompt) {
        return prompt.find("Penn") != std::string_view::npos ? std::string("- Aldous Penn\n")
                                                             : std::string("NONE");
    });
    LlmMentionDetector d(backend);
    EXPECT_EQ(d.mentions("who is penn"), std::vector<std::string>{});
    EXPECT_EQ(d.mentions("who is Penn"), std::vector<std::string>{"Aldous Penn"});
}

TEST(AssembleContext, DisjointPlacement) {
    auto dense = range(10, 24);  // 15 ids
    auto a = assemble_context({1, 2, 3}, dense);
    std::vector<std::size_t> expect = {1};
    expect.insert(expect.end(), dense.begin(), dense.end());
    expect.push_back(2);
    expect.push_back(3);
    EXPECT_EQ(a.chunk_ids(), expect);
    EXPECT_EQ(a.entries.size(), 18u);
    EXPECT_EQ(a.entries.front().provenance, Provenance::lexical);
    EXPECT_EQ(a.entries[1].provenance, Provenance::dense);
    EXPECT_EQ(a.entries.back().provenance, Provenance::lexical);
    for (std::size_t i = 0; i < a.entries.size(); ++i) EXPECT_EQ(a.entries[i].assembly_position, i);
}

TEST(AssembleContext, DuplicateLexicalHitDropped) {
    auto dense = range(10, 24);
    dense[4] = 1;  // A also retrieved densely
    auto a = assemble_context({1, 2, 3}, dense);
    std::vector<std::size_t> expect = {2};
    expect.insert(expect.end(), dense.begin(), dense.end());
    expect.push_back(3);
    EXPECT_EQ(a.chunk_ids(), expect);
    EXPECT_EQ(a.entries[5].provenance, Provenance::dense);
}

TEST(AssembleContext, SingleLexicalHit) {
    auto dense = range(10, 24);
    auto a = assemble_context({1}, dense);
    EXPECT_EQ(a.entries.size(), 16u);
    EXPECT_EQ(a.chunk_ids().front(), 1u);
    EXPECT_EQ(assemble_context({}, dense).chunk_ids(), dense);
}

TEST(AssembleContext, RandomizedInvariants) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> id(0, 30);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::size_t> lexical, dense;
        std::set<std::size_t> used;
        while (dense.size() < 15) {
            std::size_t v = id(rng);
            if (used.insert(v).second) dense.push_back(v);
        }
        std::set<std::size_t> lex_used;
        while (lexical.size() < 3) {
            std::size_t v = id(rng);
            if (lex_used.insert(v).second) lexical.push_back(v);
        }
        auto ids = assemble_context(lexical, dense).chunk_ids();
        EXPECT_EQ(std::set<std::size_t>(ids.begin(), ids.end()).size(), ids.size());
        EXPECT_LE(ids.size(), 18u);
        for (std::size_t v : lexical) {
            if (!used.contains(v)) {
                EXPECT_EQ(ids.front(), v);
                break;
            }
        }
    }
}

TEST(HybridRetrieve, UsesBothIndexes) {
    std::vector<Chunk> chunks;
    for (std::size_t i = 0; i < 20; ++i) {
        std::string t = "filler" + std::to_string(i) + " common";
        if (i == 17) t = "Penn measured the pier";
        chunks.push_back({"d", i, i + 1, i + 1, t, count_tokens(t)});
    }
    MockEmbedder e(64, 1);
    auto bm25 = Bm25Index::build(chunks);
    auto vectors = embed_chunks(chunks, e);
    RoutingDecision decision = detect_mentions("When did Penn arrive?");
    auto qv = e.embed_one("filler3 common");
    auto a = hybrid_retrieve("When did Penn arrive?", qv, bm25, vectors, decision);
    EXPECT_EQ(a.chunk_ids().front(), 17u);
    EXPECT_EQ(a.entries.front().provenance, Provenance::lexical);
    EXPECT_EQ(a.entries.size(), 16u);  // only one chunk scores above zero

    EXPECT_THROW(hybrid_retrieve("x", qv, Bm25Index{}, vectors, decision), std::invalid_argument);
}

TEST(MidpointReverse, WorkedExamples) {
    EXPECT_EQ(midpoint_reverse(range(1, 8)), (std::vector<std::size_t>{1, 2, 3, 4, 8, 7, 6, 5}));
    EXPECT_EQ(midpoint_reverse(range(1, 5)), range(1, 5));
    EXPECT_EQ(midpoint_reverse(std::vector<std::size_t>{}), std::vector<std::size_t>{});
    EXPECT_EQ(midpoint_reverse(range(1, 7)), (std::vector<std::size_t>{1, 2, 3, 7, 6, 5, 4}));
    EXPECT_EQ(midpoint_reverse(range(1, 6)), (std::vector<std::size_t>{1, 2, 3, 6, 5, 4}));
}

TEST(MidpointReverse, InvolutionAndMultiset) {
    for (std::size_t n = 0; n < 40; ++n) {
        auto v = range(1, n);
        auto once = midpoint_reverse(v);
        EXPECT_EQ(midpoint_reverse(once), v);
        EXPECT_TRUE(std::is_permutation(once.begin(), once.end(), v.begin(), v.end()));
    }
}

TEST(Rerank, ParseContract) {
    EXPECT_EQ(parse_rerank("3,1,2", 3).order, (std::vector<std::size_t>{2, 0, 1}));
    EXPECT_EQ(parse_rerank("2", 3).order, (std::vector<std::size_t>{1, 0, 2}));
    RerankResult garbage = parse_rerank("no idea", 3);
    EXPECT_EQ(garbage.order, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_TRUE(garbage.degraded);
    EXPECT_EQ(parse_rerank("[2] then [2] then 9 and 1", 3).order, (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Rerank, UsesBackend) {
    ScriptedBackend backend([](std::string_view, std::string_view prompt) {
        EXPECT_NE(prompt.find("[3] gamma"), std::string_view::npos);
        return std::string("3, 1, 2");
    });
    auto r = rerank({"alpha", "beta", "gamma"}, "q", backend);
    EXPECT_EQ(r.order, (std::vector<std::size_t>{2, 0, 1}));
    EXPECT_FALSE(r.degraded);
    ScriptedBackend failing([](std::string_view, std::string_view) -> std::string {
        throw BackendError("down");
    });
    auto f = rerank({"a", "b"}, "q", failing);
    EXPECT_TRUE(f.degraded);
    EXPECT_EQ(f.order.size(), 2u);
}

TEST(Answer, TruncatesToFiveChunks) {
    std::string seen;
    ScriptedBackend backend([&](std::string_view, std::string_view prompt) {
        seen = prompt;
        return std::string("scripted answer");
    });
    std::vector<std::string> eight;
    for (int i = 1; i <= 8; ++i) eight.push_back("chunk" + std::to_string(i));
    EXPECT_EQ(answer("q?", eight, backend), "scripted answer");
    EXPECT_EQ(count_numbered(seen), 5u);
    EXPECT_EQ(seen.find("chunk6"), std::string::npos);
    answer("q?", {"one", "two"}, backend);
    EXPECT_EQ(count_numbered(seen), 2u);
    EXPECT_NE(seen.find("q?"), std::string::npos);
}

TEST(Accuracy, NormalizedMatch) {
    NormalizedMatchJudge judge;
    EXPECT_DOUBLE_EQ(qa_accuracy({{"The Providence.", "the providence"}, {"A fractured arm", "fractured arm"}}, judge),
                     100.0);
    EXPECT_DOUBLE_EQ(qa_accuracy({{"no", "yes"}, {"x", "y"}}, judge), 0.0);
    std::vector<AnswerPair> ten;
    for (int i = 0; i < 10; ++i) ten.push_back({i < 7 ? "gold" : "other", "gold"});
    EXPECT_DOUBLE_EQ(qa_accuracy(ten, judge), 70.0);
    EXPECT_DOUBLE_EQ(qa_accuracy({}, judge), 0.0);
    EXPECT_FALSE(judge.correct("golden", "gold"));
}

TEST(Accuracy, LlmJudge) {
    ScriptedBackend backend([](std::string_view, std::string_view prompt) {
        return prompt.find("Candidate: right") != std::string_view::npos ? std::string("CORRECT")
                                                                        : std::string("Incorrect.");
    });
    LlmJudge judge(backend);
    EXPECT_DOUBLE_EQ(qa_accuracy({{"right", "r"}, {"wrong", "r"}}, judge), 50.0);
}

TEST(RagPipeline, EndToEndDeterministic) {
    Document doc = load_document(data_dir() / "harbor.txt", DocumentFormat::plain_text);
    std::vector<Chunk> chunks;
    for (const auto& p : doc.paragraphs()) {
        chunks.push_back({doc.doc_id(), p.index - 1, p.index, p.index, p.text, count_tokens(p.text)});
    }
    MockEmbedder embedder(128, 0);
    ScriptedBackend llm([](std::string_view, std::string_view prompt) {
        if (prompt.find("Order the documents") != std::string_view::npos) return std::string("2, 1");
        return std::string("The Providence");
    });
    CapitalizationDetector detector;
    RagPipeline pipeline(chunks, embedder, llm, detector);
    RagResult r = pipeline.run("Which boat of Elias failed to return?");
    EXPECT_TRUE(r.routing.mentions_found);
    EXPECT_LE(r.assembly.entries.size(), 18u);
    EXPECT_EQ(r.context.size(), 5u);
    EXPECT_EQ(r.reranked[0], r.reordered[1]);
    EXPECT_EQ(r.answer, "The Providence");
    RagResult again = pipeline.run("Which boat of Elias failed to return?");
    EXPECT_EQ(again.reranked, r.reranked);
    EXPECT_EQ(again.assembly.chunk_ids(), r.assembly.chunk_ids());
}
