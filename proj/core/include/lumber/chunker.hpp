#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lumber/backend.hpp"
#include "lumber/chunk.hpp"
#include "lumber/corpus.hpp"
#include "lumber/error.hpp"
#include "lumber/tokens.hpp"

namespace lumber {

struct ChunkerConfig {
    std::size_t theta = 550;  // token budget of one group
    std::size_t max_retries = 3;
    std::size_t min_tail_paragraphs = 2;
    std::size_t id_width = 4;
    double temperature = 0.0;

    /// Throws std::invalid_argument on theta, id_width or min_tail_paragraphs of 0.
    void validate() const;
};

/// The window of consecutive paragraphs shown to the model in one iteration.
struct Group {
    std::string doc_id;
    std::vector<Paragraph> paragraphs;
    std::size_t start_index = 0;
    std::size_t token_total = 0;

    std::size_t last_index() const { return paragraphs.back().index; }
};

/// Appends paragraphs from `start` until the running total first exceeds
/// theta (the exceeding paragraph is included) or the document ends. Always
/// holds at least one paragraph. Throws std::out_of_range for a bad start.
Group build_group(const Document& document, std::size_t start, const ChunkerConfig& config,
                  const TokenCounter& counter = default_token_counter());

/// Same, with per-paragraph token counts already computed (`token_counts[i]`
/// belongs to paragraph i + 1).
Group build_group(const Document& document, std::span<const std::size_t> token_counts,
                  std::size_t start, const ChunkerConfig& config);

/// Renders the segmentation prompt: instructions, then every paragraph as
/// "ID <zero-padded index>: <text>" separated by blank lines.
std::string render_prompt(const Group& group, const ChunkerConfig& config);

/// Extracts "Answer: ID <digits>" (falling back to a bare "ID <digits>") and
/// checks it lies in (start_index, last_index]. Throws ParseError or
/// OutOfRangeError.
std::size_t parse_split_id(std::string_view response, const Group& group);

/// Per-iteration record of a chunking run.
struct GroupTrace {
    std::size_t start_index = 0;
    std::size_t last_index = 0;
    std::size_t paragraph_count = 0;
    std::size_t token_total = 0;
    std::size_t last_tokens = 0;  // token count of the group's last paragraph
    bool reaches_end = false;
    bool asked_model = false;
    std::size_t attempts = 0;  // prompts sent for this group
    bool fell_back = false;    // split placed after the group's last paragraph
    std::size_t split_id = 0;  // first paragraph of the next group
};

struct LumberRun {
    std::vector<Chunk> chunks;
    std::vector<GroupTrace> groups;
    std::size_t backend_calls = 0;
    std::size_t fallbacks = 0;
};

/// Thrown when the backend keeps failing at transport level. Carries the
/// chunks emitted before the failure.
class ChunkingAborted : public Error {
public:
    ChunkingAborted(const std::string& what, std::vector<Chunk> partial)
        : Error(what), partial_(std::move(partial)) {}

    const std::vector<Chunk>& partial() const noexcept { return partial_; }

private:
    std::vector<Chunk> partial_;
};

/// Segments `document` by repeatedly asking the model where the content of
/// the current group shifts. The answer d closes the current chunk at d - 1
/// and starts the next group at d.
///
/// Groups that cannot be split meaningfully skip the model: a single
/// paragraph, or a final group that is within theta or shorter than
/// min_tail_paragraphs. Unparsable or out-of-range answers are re-asked up to
/// max_retries times, then the split falls after the group's last paragraph.
/// The result always partitions 1..N.
LumberRun run_lumberchunker(const Document& document, const ChunkerConfig& config,
                            CompletionBackend& backend,
                            const TokenCounter& counter = default_token_counter());

std::vector<Chunk> lumberchunk(const Document& document, const ChunkerConfig& config,
                               CompletionBackend& backend,
                               const TokenCounter& counter = default_token_counter());

}  // namespace lumber
