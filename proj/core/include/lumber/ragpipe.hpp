#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lumber/backend.hpp"
#include "lumber/chunk.hpp"
#include "lumber/embedding.hpp"
#include "lumber/index.hpp"

namespace lumber {

struct RoutingDecision {
    bool mentions_found = false;
    std::vector<std::string> mention_strings;
    std::size_t bm25_k = 1;
};

/// Finds mentions of people or events in a query.
class MentionDetector {
public:
    virtual ~MentionDetector() = default;
    virtual std::vector<std::string> mentions(std::string_view query) = 0;
};

/// Capitalized tokens that are not sentence-initial, plus multi-word
/// capitalized spans. Sentence-initial question and function words are
/// ignored.
class CapitalizationDetector final : public MentionDetector {
public:
    std::vector<std::string> mentions(std::string_view query) override;
};

std::string render_mention_prompt(std::string_view query);

/// Asks a completion backend to list mentions, one per line, or NONE.
class LlmMentionDetector final : public MentionDetector {
public:
    explicit LlmMentionDetector(CompletionBackend& backend) : backend_(backend) {}
    std::vector<std::string> mentions(std::string_view query) override;

private:
    CompletionBackend& backend_;
};

inline constexpr std::size_t kBm25KWithMentions = 3;
inline constexpr std::size_t kBm25KWithoutMentions = 1;
inline constexpr std::size_t kDenseK = 15;
inline constexpr std::size_t kAnswerContext = 5;
inline constexpr std::size_t kReverseThreshold = 6;

/// Detector failure is treated as "no mentions".
RoutingDecision detect_mentions(std::string_view query, MentionDetector& detector);
RoutingDecision detect_mentions(std::string_view query);

enum class Provenance { lexical, dense };

struct ContextEntry {
    std::size_t chunk_id = 0;
    Provenance provenance = Provenance::dense;
    std::size_t assembly_position = 0;  // position before any reordering

    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

struct ContextAssembly {
    std::vector<ContextEntry> entries;

    std::vector<std::size_t> chunk_ids() const;
};

/// BM25 hits that also appear in the dense list are dropped. The best
/// surviving lexical hit goes first, the dense hits follow, and the other
/// lexical survivors go last.
ContextAssembly assemble_context(const std::vector<std::size_t>& lexical,
                                 const std::vector<std::size_t>& dense);

/// BM25 top-bm25_k (positive scores only) and dense top-dense_k, assembled
/// by assemble_context. Throws std::invalid_argument on empty indexes.
ContextAssembly hybrid_retrieve(const std::string& query, std::span<const float> query_vector,
                                const Bm25Index& bm25, const VectorIndex& vectors,
                                const RoutingDecision& decision, std::size_t dense_k = kDenseK);

/// With at least six items, keeps the first n/2 in place and reverses the rest.
template <typename T>
std::vector<T> midpoint_reverse(std::vector<T> items) {
    if (items.size() >= kReverseThreshold) {
        std::reverse(items.begin() + static_cast<std::ptrdiff_t>(items.size() / 2), items.end());
    }
    return items;
}

struct RerankResult {
    std::vector<std::size_t> order;  // positions into the input list
    bool degraded = false;
};

std::string render_rerank_prompt(std::string_view query, const std::vector<std::string>& chunks);

/// Parses a 1-based permutation from the response. Unknown or repeated
/// numbers are ignored; positions the response omits follow in their prior
/// order. No usable number keeps the input order and sets `degraded`.
RerankResult parse_rerank(std::string_view response, std::size_t n);

RerankResult rerank(const std::vector<std::string>& chunks, std::string_view query,
                    CompletionBackend& backend);

/// Prompt over the first kAnswerContext chunks.
std::string render_answer_prompt(std::string_view query, const std::vector<std::string>& chunks);

std::string answer(std::string_view query, const std::vector<std::string>& reranked_chunks,
                   CompletionBackend& backend);

class AnswerJudge {
public:
    virtual ~AnswerJudge() = default;
    virtual bool correct(std::string_view generated, std::string_view gold) = 0;
};

/// Correct when the normalized gold answer equals or is contained in the
/// normalized generated answer.
class NormalizedMatchJudge final : public AnswerJudge {
public:
    bool correct(std::string_view generated, std::string_view gold) override;
};

/// Asks a backend for CORRECT / INCORRECT.
class LlmJudge final : public AnswerJudge {
public:
    explicit LlmJudge(CompletionBackend& backend) : backend_(backend) {}
    bool correct(std::string_view generated, std::string_view gold) override;

private:
    CompletionBackend& backend_;
};

struct AnswerPair {
    std::string generated;
    std::string gold;
};

/// Percentage of answers the judge accepts; 0 for an empty list.
double qa_accuracy(const std::vector<AnswerPair>& answers, AnswerJudge& judge);

struct RagResult {
    std::string question;
    RoutingDecision routing;
    ContextAssembly assembly;
    std::vector<std::size_t> reordered;  // chunk ids after midpoint reversal
    std::vector<std::size_t> reranked;   // chunk ids after model re-ranking
    std::vector<std::size_t> context;    // chunk ids given to the answer prompt
    std::string answer;
    bool rerank_degraded = false;
};

/// Retrieve, reorder, re-rank and answer over one document's chunks. The
/// indexes are built once and shared read-only across queries.
class RagPipeline {
public:
    RagPipeline(std::vector<Chunk> chunks, EmbeddingBackend& embedder, CompletionBackend& llm,
                MentionDetector& detector);

    RagResult run(const std::string& question);
    const std::vector<Chunk>& chunks() const noexcept { return chunks_; }

private:
    const Chunk& by_id(std::size_t chunk_id) const;

    std::vector<Chunk> chunks_;
    EmbeddingBackend& embedder_;
    CompletionBackend& llm_;
    MentionDetector& detector_;
    Bm25Index bm25_;
    VectorIndex vectors_;
};

}  // namespace lumber
