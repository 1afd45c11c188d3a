#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lumber/backend.hpp"
#include "lumber/chunk.hpp"
#include "lumber/corpus.hpp"
#include "lumber/embedding.hpp"
#include "lumber/tokens.hpp"

namespace lumber {

/// One chunk per paragraph.
std::vector<Chunk> paragraph_chunks(const Document& document,
                                    const TokenCounter& counter = default_token_counter());

struct RecursiveConfig {
    std::size_t max_tokens = 450;
    /// Tried in order; must end with "" (split into characters).
    std::vector<std::string> separators = {"\n\n", "\n", " ", ""};

    void validate() const;
};

struct TextSpan {
    std::size_t offset = 0;
    std::size_t length = 0;

    friend bool operator==(const TextSpan&, const TextSpan&) = default;
};

/// Splits `text` into consecutive spans of at most max_tokens. A separator
/// stays attached to the piece before it, so the spans tile `text` exactly.
std::vector<TextSpan> recursive_split(std::string_view text, const RecursiveConfig& config,
                                      const TokenCounter& counter = default_token_counter());

/// recursive_split over the document text. Chunk text is the exact span
/// (trailing separator included); start_para/end_para give the paragraphs
/// the span touches.
std::vector<Chunk> recursive_chunks(const Document& document, const RecursiveConfig& config = {},
                                    const TokenCounter& counter = default_token_counter());

enum class SemanticUnit { sentence, paragraph };

struct SemanticConfig {
    double breakpoint_percentile = 95.0;
    SemanticUnit unit = SemanticUnit::paragraph;
    std::size_t batch_size = 64;

    void validate() const;
};

/// Linear-interpolation percentile (the usual numpy default) of `values`.
double percentile(std::vector<double> values, double pct);

/// Splits a paragraph into sentences at '.', '!' or '?' followed by whitespace.
std::vector<std::string> split_sentences(std::string_view paragraph);

/// Breaks wherever the cosine distance between consecutive units is strictly
/// above the configured percentile of all consecutive distances.
std::vector<Chunk> semantic_chunks(const Document& document, EmbeddingBackend& embedder,
                                   const SemanticConfig& config = {},
                                   const TokenCounter& counter = default_token_counter());

struct PropositionResult {
    std::vector<Chunk> chunks;
    std::size_t warnings = 0;
};

std::string render_proposition_prompt(std::string_view passage);

/// One proposition per non-empty response line (list markers stripped). Each
/// inherits the parent's paragraph span. An empty response is retried once;
/// after that the parent chunk passes through unchanged and a warning is
/// counted.
PropositionResult propositionize(const Chunk& chunk, CompletionBackend& backend,
                                 const TokenCounter& counter = default_token_counter());

/// propositionize over every chunk, renumbering chunk_ids from 0.
PropositionResult proposition_chunks(const std::vector<Chunk>& chunks, CompletionBackend& backend,
                                     const TokenCounter& counter = default_token_counter());

struct HydeResult {
    std::string text;
    bool degraded = false;  // the original query was returned
};

std::string render_hyde_prompt(std::string_view query);

/// Replaces a query with a hypothetical answer passage. Backend failure or an
/// empty response returns the query unchanged.
HydeResult hyde_transform(std::string_view query, CompletionBackend& backend);

}  // namespace lumber
