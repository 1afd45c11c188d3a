#include "lumber/chunk.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "io.hpp"
#include "lumber/error.hpp"

namespace lumber {

ChunkStats chunk_stats(const std::vector<Chunk>& chunks) {
    ChunkStats stats;
    stats.count = chunks.size();
    if (chunks.empty()) return stats;
    double tokens = 0.0;
    double paragraphs = 0.0;
    std::size_t lo = chunks.front().token_count;
    std::size_t hi = lo;
    for (const Chunk& c : chunks) {
        tokens += static_cast<double>(c.token_count);
        paragraphs += static_cast<double>(c.end_para - c.start_para + 1);
        lo = std::min(lo, c.token_count);
        hi = std::max(hi, c.token_count);
    }
    auto n = static_cast<double>(chunks.size());
    stats.mean_tokens = tokens / n;
    stats.mean_paragraphs = paragraphs / n;
    stats.min_tokens = lo;
    stats.max_tokens = hi;
    return stats;
}

std::string chunk_records(const std::vector<Chunk>& chunks) {
    std::string out;
    for (const Chunk& c : chunks) {
        nlohmann::ordered_json record;
        record["doc_id"] = c.doc_id;
        record["chunk_id"] = c.chunk_id;
        record["start_para"] = c.start_para;
        record["end_para"] = c.end_para;
        record["token_count"] = c.token_count;
        record["text"] = c.text;
        out.append(record.dump());
        out.push_back('\n');
    }
    return out;
}

std::vector<Chunk> parse_chunk_records(std::string_view content, const std::string& source) {
    std::vector<Chunk> chunks;
    std::size_t line_no = 0;
    for (std::string_view line : io::lines(content)) {
        ++line_no;
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            auto record = nlohmann::json::parse(line);
            Chunk c;
            c.doc_id = record.at("doc_id").get<std::string>();
            c.chunk_id = record.at("chunk_id").get<std::size_t>();
            c.start_para = record.at("start_para").get<std::size_t>();
            c.end_para = record.at("end_para").get<std::size_t>();
            c.token_count = record.at("token_count").get<std::size_t>();
            c.text = record.at("text").get<std::string>();
            if (c.start_para == 0 || c.start_para > c.end_para) {
                throw MalformedRecordError(source, line_no, "invalid paragraph span");
            }
            chunks.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(source, line_no, e.what());
        }
    }
    return chunks;
}

void write_chunks(const std::vector<Chunk>& chunks, const std::filesystem::path& path) {
    io::write_file(path, chunk_records(chunks));
}

std::vector<Chunk> load_chunks(const std::filesystem::path& path) {
    return parse_chunk_records(io::read_file(path), path.string());
}

}  // namespace lumber
