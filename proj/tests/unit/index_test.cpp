#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "lumber/error.hpp"
#include "lumber/index.hpp"
#include "lumber/text.hpp"
#include "lumber/tokens.hpp"
#include "test_support.hpp"

using namespace lumber;
using namespace lumber::testing;

namespace {

std::vector<Chunk> chunks_of(const std::vector<std::string>& texts) {
    std::vector<Chunk> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        out.push_back({"d", i, i + 1, i + 1, texts[i], count_tokens(texts[i])});
    }
    return out;
}

double norm(const Vector& v) {
    double s = 0;
    for (float x : v) s += double(x) * x;
    return std::sqrt(s);
}

// Direct formula evaluation, independent of the index's data structures.
double bm25_oracle(const std::vector<std::string>& docs, const std::string& query, std::size_t d,
                   double k1 = 1.2, double b = 0.75) {
    std::vector<std::vector<std::string>> toks;
    double total = 0;
    for (const auto& doc : docs) {
        toks.push_back(text::analyze(doc));
        total += toks.back().size();
    }
    const double n = docs.size();
    const double avgdl = total / n;
    double score = 0;
    for (const std::string& q : text::analyze(query)) {
        double df = 0;
        for (const auto& t : toks) df += std::find(t.begin(), t.end(), q) != t.end() ? 1 : 0;
        double f = std::count(toks[d].begin(), toks[d].end(), q);
        double idf = std::log(1 + (n - df + 0.5) / (df + 0.5));
        score += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * toks[d].size() / avgdl));
    }
    return score;
}

class CountingEmbedder final : public EmbeddingBackend {
public:
    std::vector<Vector> embed(std::span<const std::string> texts) override {
        ++calls;
        return inner.embed(texts);
    }
    std::string backend_id() const override { return inner.backend_id(); }
    MockEmbedder inner{32, 4};
    std::size_t calls = 0;
};

}  // namespace

TEST(MockEmbedder, UnitNormAndDeterministic) {
    MockEmbedder e(256, 42);
    auto vs = e.embed(std::vector<std::string>{"the cat sat", "the cat sat", "", "dog"});
    ASSERT_EQ(vs.size(), 4u);
    for (const auto& v : vs) {
        EXPECT_EQ(v.size(), 256u);
        EXPECT_NEAR(norm(v), 1.0, 1e-6);
    }
    EXPECT_EQ(vs[0], vs[1]);
    EXPECT_EQ(vs[0], e.embed_one("sat the CAT"));  // multiset of tokens only
    EXPECT_NEAR(cosine(vs[0], vs[0]), 1.0, 1e-6);
    EXPECT_NE(vs[0], MockEmbedder(256, 43).embed_one("the cat sat"));
    EXPECT_FLOAT_EQ(vs[2][0], 1.0f);
}

TEST(EmbedChunks, OneVectorPerChunk) {
    MockEmbedder e(16, 0);
    auto index = embed_chunks(chunks_of({"alpha beta", "alpha beta"}), e);
    ASSERT_EQ(index.size(), 2u);
    EXPECT_EQ(index.dimension(), 16u);
    EXPECT_TRUE(std::equal(index.vector(0).begin(), index.vector(0).end(), index.vector(1).begin()));
    EXPECT_THROW(embed_chunks({}, e), std::invalid_argument);
}

TEST(EmbeddingCache, WarmCacheMakesNoCalls) {
    TempDir dir;
    auto chunks = chunks_of({"one", "two", "three", "one"});
    CountingEmbedder inner;
    Vector first;
    {
        EmbeddingCache cache(dir / "e.jsonl");
        CachingEmbedder caching(inner, cache, 2);
        auto index = embed_chunks(chunks, caching);
        first.assign(index.vector(2).begin(), index.vector(2).end());
        EXPECT_EQ(caching.backend_calls(), 2u);  // three distinct texts, batches of two
    }
    inner.calls = 0;
    EmbeddingCache cache(dir / "e.jsonl");
    EXPECT_EQ(cache.size(), 3u);
    CachingEmbedder caching(inner, cache);
    auto index = embed_chunks(chunks, caching);
    EXPECT_EQ(inner.calls, 0u);
    EXPECT_TRUE(std::equal(first.begin(), first.end(), index.vector(2).begin()));

    std::filesystem::remove(dir / "e.jsonl");
    EmbeddingCache fresh(dir / "e.jsonl");
    EXPECT_EQ(fresh.size(), 0u);
}

TEST(EmbedBatched, FailureNamesBatchStart) {
    class FailSecond final : public EmbeddingBackend {
    public:
        std::vector<Vector> embed(std::span<const std::string> texts) override {
            if (++calls == 2) throw BackendError("boom");
            return MockEmbedder(4).embed(texts);
        }
        std::string backend_id() const override { return "x"; }
        int calls = 0;
    } backend;
    std::vector<std::string> texts(5, "t");
    try {
        embed_batched(backend, texts, 2);
        FAIL() << "expected EmbeddingError";
    } catch (const EmbeddingError& e) {
        EXPECT_EQ(e.unit_index(), 2u);
    }
}

TEST(CosineTopk, SelfMatchRanksFirst) {
    MockEmbedder e(64, 7);
    auto chunks = chunks_of({"red apple", "green pear", "blue sky", "grey stone"});
    auto index = embed_chunks(chunks, e);
    auto q = e.embed_one("blue sky");
    auto hits = cosine_topk(index, q, 2);
    ASSERT_EQ(hits.size(), 2u);
    EXPECT_EQ(hits[0].chunk_id, 2u);
    EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
    EXPECT_EQ(cosine_topk(index, q, 100).size(), 4u);
    EXPECT_THROW(cosine_topk(index, q, 0), std::invalid_argument);
    EXPECT_THROW(cosine_topk(index, Vector(3, 0.5f), 1), DimensionMismatchError);
}

TEST(CosineTopk, MatchesFullSortOracle) {
    std::mt19937_64 rng(31);
    std::normal_distribution<float> g;
    for (int trial = 0; trial < 200; ++trial) {
        VectorIndex index;
        std::vector<Vector> vs;
        for (std::size_t i = 0; i < 5; ++i) {
            Vector v(8);
            for (auto& x : v) x = g(rng);
            normalize(v);
            vs.push_back(v);
            index.add(10 - i, v);
        }
        Vector q(8);
        for (auto& x : q) x = g(rng);
        normalize(q);

        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < 5; ++i) {
            double dot = 0, na = 0, nb = 0;
            for (std::size_t j = 0; j < 8; ++j) {
                dot += double(vs[i][j]) * q[j];
                na += double(vs[i][j]) * vs[i][j];
                nb += double(q[j]) * q[j];
            }
            all.push_back({dot / std::sqrt(na * nb), 10 - i});
        }
        std::sort(all.begin(), all.end(), [](auto& a, auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        auto hits = cosine_topk(index, q, 3);
        ASSERT_EQ(hits.size(), 3u);
        for (std::size_t r = 0; r < 3; ++r) {
            EXPECT_EQ(hits[r].chunk_id, all[r].second);
            EXPECT_NEAR(hits[r].score, all[r].first, 1e-9);
        }
    }
}

TEST(CosineTopk, TiesBrokenByChunkId) {
    VectorIndex index;
    index.add(5, {1.0f, 0.0f});
    index.add(2, {1.0f, 0.0f});
    index.add(9, {0.0f, 1.0f});
    auto hits = cosine_topk(index, Vector{1.0f, 0.0f}, 3);
    EXPECT_EQ(hits[0].chunk_id, 2u);
    EXPECT_EQ(hits[1].chunk_id, 5u);
    EXPECT_THROW(index.add(1, {1.0f}), DimensionMismatchError);
}

TEST(CosineTopk, UnrelatedChunkKeepsRelativeOrder) {
    MockEmbedder e(64, 2);
    auto chunks = chunks_of({"harbor lamp oil", "railway engineer", "storm boat", "lamp storm"});
    auto before = cosine_topk(embed_chunks(chunks, e), e.embed_one("lamp storm night"), 10);
    chunks.push_back({"d", 99, 5, 5, "zebra quantum", 2});
    auto after = cosine_topk(embed_chunks(chunks, e), e.embed_one("lamp storm night"), 10);
    std::vector<std::size_t> a, b;
    for (auto& h : before) a.push_back(h.chunk_id);
    for (auto& h : after) if (h.chunk_id != 99) b.push_back(h.chunk_id);
    EXPECT_EQ(a, b);
}

TEST(Bm25, CatSatRanksFirst) {
    auto index = Bm25Index::build(chunks_of({"cat sat", "dog ran"}));
    auto hits = index.topk("cat", 2);
    EXPECT_EQ(hits[0].chunk_id, 0u);
    EXPECT_GT(hits[0].score, 0.0);
    EXPECT_EQ(hits[1].score, 0.0);
}

TEST(Bm25, NoSharedTermsScoresZero) {
    auto index = Bm25Index::build(chunks_of({"cat sat", "dog ran", "bird flew"}));
    for (const auto& h : index.score_all("fish swam")) EXPECT_EQ(h.score, 0.0);
    for (const auto& h : index.score_all("")) EXPECT_EQ(h.score, 0.0);
}

TEST(Bm25, MatchesFormulaOracle) {
    const std::vector<std::string> docs = {
        "The lamp at the end of the pier burned all night.",
        "Oil for the lamp came from the chandler on Tanner Street.",
        "The engineer measured the pier with a chain, the chain rattled.",
        "Storm waves broke over the quay and boats tore loose.",
        "The railway reached the harbor town two years later."};
    const std::vector<std::string> queries = {"lamp",        "the pier",       "chain chain",
                                              "storm boats", "railway harbor", "oil lamp pier",
                                              "THE",         "nothing here",   "quay, waves!"};
    auto index = Bm25Index::build(chunks_of(docs));
    for (const auto& q : queries) {
        auto hits = index.score_all(q);
        for (std::size_t d = 0; d < docs.size(); ++d) {
            EXPECT_NEAR(hits[d].score, bm25_oracle(docs, q, d), 1e-9) << q << " / " << d;
        }
    }
    EXPECT_EQ(index.document_frequency("the"), 5u);
    EXPECT_LE(index.document_frequency("lamp"), index.size());
    EXPECT_GT(index.average_length(), 0.0);
}

TEST(Bm25, ZeroIffNoSharedTerm) {
    std::mt19937_64 rng(8);
    const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h"};
    std::uniform_int_distribution<std::size_t> w(0, vocab.size() - 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> docs;
        for (int i = 0; i < 5; ++i) {
            std::string t;
            for (int j = 0; j < 4; ++j) t += vocab[w(rng)] + " ";
            docs.push_back(t);
        }
        std::string q = vocab[w(rng)] + " " + vocab[w(rng)];
        auto index = Bm25Index::build(chunks_of(docs));
        auto hits = index.score_all(q);
        auto qt = text::analyze(q);
        for (std::size_t d = 0; d < docs.size(); ++d) {
            auto dt = text::analyze(docs[d]);
            bool shared = std::any_of(qt.begin(), qt.end(), [&](const std::string& t) {
                return std::find(dt.begin(), dt.end(), t) != dt.end();
            });
            EXPECT_EQ(hits[d].score > 0.0, shared);
        }
    }
}

TEST(Bm25, TopkOrderingAndTies) {
    auto index = Bm25Index::build(chunks_of({"x y", "x y", "x", "z"}));
    auto hits = index.topk("x", 10);
    ASSERT_EQ(hits.size(), 4u);
    EXPECT_EQ(hits[0].chunk_id, 2u);  // shortest document
    EXPECT_EQ(hits[1].chunk_id, 0u);
    EXPECT_EQ(hits[2].chunk_id, 1u);
    EXPECT_EQ(hits[3].chunk_id, 3u);
    EXPECT_EQ(bm25_topk(index, "x", 1).size(), 1u);
}
