#include <benchmark/benchmark.h>

#include <random>
#include <regex>
#include <string>

#include "lumber/backend.hpp"
#include "lumber/baselines.hpp"
#include "lumber/chunker.hpp"
#include "lumber/embedding.hpp"
#include "lumber/index.hpp"

using namespace lumber;

namespace {

std::string random_words(std::mt19937_64& rng, std::size_t n, bool breaks = true) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += (breaks && i % 90 == 0) ? "\n\n" : " ";
        s += "w" + std::to_string(std::uniform_int_distribution<int>(0, 2000)(rng));
    }
    return s;
}

std::vector<Chunk> random_chunks(std::size_t count, std::size_t words) {
    std::mt19937_64 rng(1);
    std::vector<Chunk> chunks;
    for (std::size_t i = 0; i < count; ++i) {
        std::string t = random_words(rng, words);
        chunks.push_back({"bench", i, i + 1, i + 1, t, count_tokens(t)});
    }
    return chunks;
}

Document random_document(std::size_t paragraphs) {
    std::mt19937_64 rng(2);
    std::vector<Paragraph> ps;
    for (std::size_t i = 1; i <= paragraphs; ++i) {
        ps.push_back({i, random_words(rng, std::uniform_int_distribution<std::size_t>(20, 200)(rng), false)});
    }
    return Document("bench", "bench", std::move(ps));
}

}  // namespace

static void BM_Bm25Query(benchmark::State& state) {
    auto chunks = random_chunks(static_cast<std::size_t>(state.range(0)), 250);
    Bm25Index index = bm25_build(chunks);
    for (auto _ : state) benchmark::DoNotOptimize(bm25_topk(index, "w12 w400 w999 w7", 3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25Query)->Arg(100)->Arg(1000);

static void BM_CosineTopk(benchmark::State& state) {
    auto chunks = random_chunks(static_cast<std::size_t>(state.range(0)), 50);
    MockEmbedder embedder(256, 0);
    VectorIndex index = embed_chunks(chunks, embedder);
    Vector q = embedder.embed_one("w12 w400 w999");
    for (auto _ : state) benchmark::DoNotOptimize(cosine_topk(index, q, 15));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CosineTopk)->Arg(1000)->Arg(10000);

static void BM_RecursiveSplit(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::string text = random_words(rng, static_cast<std::size_t>(state.range(0)));
    RecursiveConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(recursive_split(text, config));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_RecursiveSplit)->Arg(10000)->Arg(100000);

static void BM_LumberChunkScripted(benchmark::State& state) {
    Document doc = random_document(static_cast<std::size_t>(state.range(0)));
    static const std::regex ids(R"(ID (\d+):)");
    auto backend = ScriptedBackend::from_prompt([](std::string_view prompt) {
        std::string s(prompt);
        std::vector<std::string> found;
        for (auto it = std::sregex_iterator(s.begin(), s.end(), ids); it != std::sregex_iterator(); ++it) {
            found.push_back((*it)[1].str());
        }
        return "Answer: ID " + found[found.size() / 2];
    });
    ChunkerConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(lumberchunk(doc, config, *backend));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LumberChunkScripted)->Arg(200)->Arg(2000);
BENCHMARK_MAIN();
