#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lumber/backend.hpp"
#include "lumber/chunk.hpp"
#include "lumber/chunker.hpp"
#include "lumber/corpus.hpp"
#include "lumber/embedding.hpp"
#include "lumber/tokens.hpp"

namespace lumber {

struct RelevanceConfig {
    bool use_containment = true;
    bool use_ngram_ratio = true;
    std::size_t ngram = 3;
    double ngram_threshold = 0.8;
};

/// Fraction of the passage's word n-grams that also occur in the chunk, both
/// normalized with text::normalize_for_matching. A passage shorter than n
/// words is treated as a single n-gram.
double ngram_containment(std::string_view chunk_text, std::string_view passage, std::size_t n);

/// True when the normalized passage is a substring of the normalized chunk,
/// or its n-gram containment reaches the threshold.
bool judge_relevance(std::string_view chunk_text, const QAPair& qa,
                     const RelevanceConfig& config = {});

struct RetrievalRun {
    std::size_t qa_index = 0;
    std::vector<std::size_t> ranked_chunks;  // chunk_ids, best first
    std::optional<std::size_t> gold_rank;    // 1-based
};

/// Mean over runs of 100 / log2(gold_rank + 1) when gold_rank <= k, else 0.
/// Throws std::invalid_argument for an empty run list or k == 0.
double dcg_at_k(const std::vector<RetrievalRun>& runs, std::size_t k);
/// 100 * fraction of runs with gold_rank <= k.
double recall_at_k(const std::vector<RetrievalRun>& runs, std::size_t k);

inline const std::vector<std::size_t> kDefaultCutoffs = {1, 2, 5, 10, 20};

struct MetricsReport {
    std::string method;
    std::vector<std::size_t> ks;
    std::map<std::size_t, double> dcg;
    std::map<std::size_t, double> recall;
    std::size_t queries = 0;
    double chunking_seconds = 0.0;
    std::size_t warnings = 0;
    std::vector<RetrievalRun> runs;
};

/// Optional per-question transform applied before embedding (HyDE).
using QueryTransform = std::function<std::string(const std::string& question)>;

struct EvalOptions {
    std::vector<std::size_t> ks = kDefaultCutoffs;
    RelevanceConfig relevance;
    QueryTransform query_transform;
    double chunking_seconds = 0.0;
    std::size_t batch_size = 64;
};

/// Embeds chunks once, ranks each question against its own document's chunks
/// down to max(ks), and records the rank of the first relevant chunk.
/// Questions whose document has no chunks count as misses with a warning.
MetricsReport evaluate(std::string method, const std::vector<Chunk>& chunks,
                       const std::vector<QAPair>& qa_pairs, EmbeddingBackend& embedder,
                       const EvalOptions& options = {});

inline const std::vector<std::size_t> kDefaultThetas = {450, 550, 650, 1000};

std::string theta_label(std::size_t theta);

/// One LumberChunker run and evaluation per theta; reports come back sorted
/// by theta ascending and carry the chunking wall time.
std::vector<MetricsReport> sweep_theta(const std::vector<Document>& documents,
                                       const std::vector<QAPair>& qa_pairs,
                                       std::vector<std::size_t> thetas, CompletionBackend& backend,
                                       EmbeddingBackend& embedder,
                                       const ChunkerConfig& base = {},
                                       const EvalOptions& options = {},
                                       const TokenCounter& counter = default_token_counter());

/// Tab-separated comparison table: one row per method, DCG@k then Recall@k
/// columns, two decimals.
std::string format_table(const std::vector<MetricsReport>& reports);

/// One JSON object per report, per line.
std::string report_records(const std::vector<MetricsReport>& reports);

}  // namespace lumber
