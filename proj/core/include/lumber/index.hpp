#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lumber/chunk.hpp"
#include "lumber/embedding.hpp"

namespace lumber {

struct Hit {
    std::size_t chunk_id = 0;
    double score = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Sorts by descending score, ties by ascending chunk_id.
void sort_hits(std::vector<Hit>& hits);

/// Exact brute-force cosine index over chunk vectors.
class VectorIndex {
public:
    VectorIndex() = default;

    /// Throws DimensionMismatchError if `v` differs from earlier entries.
    void add(std::size_t chunk_id, Vector v);

    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    std::size_t dimension() const noexcept { return dimension_; }
    std::span<const float> vector(std::size_t position) const;
    std::size_t chunk_id(std::size_t position) const { return ids_.at(position); }

private:
    std::vector<std::size_t> ids_;
    std::vector<Vector> vectors_;
    std::size_t dimension_ = 0;
};

/// One vector per chunk; chunk texts are embedded in batches.
VectorIndex embed_chunks(const std::vector<Chunk>& chunks, EmbeddingBackend& backend,
                         std::size_t batch_size = 64);

/// Top-k by cosine similarity, descending, ties by ascending chunk_id.
/// k larger than the index returns every entry.
std::vector<Hit> cosine_topk(const VectorIndex& index, std::span<const float> query,
                             std::size_t k);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 over chunk texts analyzed with text::analyze, using
/// idf = log(1 + (N - df + 0.5) / (df + 0.5)).
class Bm25Index {
public:
    Bm25Index() = default;
    static Bm25Index build(const std::vector<Chunk>& chunks, Bm25Params params = {});

    /// Score of every indexed chunk for `query`, in index order. Query terms
    /// count with multiplicity.
    std::vector<Hit> score_all(const std::string& query) const;
    std::vector<Hit> topk(const std::string& query, std::size_t k) const;

    std::size_t size() const noexcept { return chunk_ids_.size(); }
    bool empty() const noexcept { return chunk_ids_.empty(); }
    std::size_t document_frequency(const std::string& term) const;
    double average_length() const noexcept { return avg_length_; }
    double idf(const std::string& term) const;
    const Bm25Params& params() const noexcept { return params_; }

private:
    Bm25Params params_;
    std::vector<std::size_t> chunk_ids_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
    std::vector<std::size_t> lengths_;
    std::unordered_map<std::string, std::size_t> doc_freqs_;
    double avg_length_ = 0.0;
};

inline Bm25Index bm25_build(const std::vector<Chunk>& chunks, Bm25Params params = {}) {
    return Bm25Index::build(chunks, params);
}

inline std::vector<Hit> bm25_topk(const Bm25Index& index, const std::string& query,
                                  std::size_t k) {
    return index.topk(query, k);
}

}  // namespace lumber
