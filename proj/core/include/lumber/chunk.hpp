#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lumber {

/// A contiguous span of a document used as the retrieval unit.
struct Chunk {
    std::string doc_id;
    std::size_t chunk_id = 0;
    std::size_t start_para = 0;
    std::size_t end_para = 0;
    std::string text;
    std::size_t token_count = 0;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct ChunkStats {
    std::size_t count = 0;
    std::optional<double> mean_tokens;
    std::optional<std::size_t> min_tokens;
    std::optional<std::size_t> max_tokens;
    std::optional<double> mean_paragraphs;
};

ChunkStats chunk_stats(const std::vector<Chunk>& chunks);

/// Chunk records: one JSON object per line with fields doc_id, chunk_id,
/// start_para, end_para, token_count, text (in that order).
std::string chunk_records(const std::vector<Chunk>& chunks);
std::vector<Chunk> parse_chunk_records(std::string_view content,
                                       const std::string& source = "<memory>");
void write_chunks(const std::vector<Chunk>& chunks, const std::filesystem::path& path);
std::vector<Chunk> load_chunks(const std::filesystem::path& path);

}  // namespace lumber
