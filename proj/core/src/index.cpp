#include "lumber/index.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lumber/error.hpp"
#include "lumber/text.hpp"

namespace lumber {

void sort_hits(std::vector<Hit>& hits) {
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });
}

void VectorIndex::add(std::size_t chunk_id, Vector v) {
    if (ids_.empty()) {
        dimension_ = v.size();
    } else if (v.size() != dimension_) {
        throw DimensionMismatchError(dimension_, v.size());
    }
    ids_.push_back(chunk_id);
    vectors_.push_back(std::move(v));
}

std::span<const float> VectorIndex::vector(std::size_t position) const {
    return vectors_.at(position);
}

VectorIndex embed_chunks(const std::vector<Chunk>& chunks, EmbeddingBackend& backend,
                         std::size_t batch_size) {
    if (chunks.empty()) throw std::invalid_argument("no chunks to embed");
    std::vector<std::string> texts;
    texts.reserve(chunks.size());
    for (const Chunk& c : chunks) texts.push_back(c.text);
    auto vectors = embed_batched(backend, texts, batch_size);
    VectorIndex index;
    for (std::size_t i = 0; i < chunks.size(); ++i) index.add(chunks[i].chunk_id, std::move(vectors[i]));
    return index;
}

std::vector<Hit> cosine_topk(const VectorIndex& index, std::span<const float> query,
                             std::size_t k) {
    if (k == 0) throw std::invalid_argument("k must be positive");
    if (!index.empty() && query.size() != index.dimension()) {
        throw DimensionMismatchError(index.dimension(), query.size());
    }
    std::vector<Hit> hits;
    hits.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        hits.push_back({index.chunk_id(i), cosine(index.vector(i), query)});
    }
    sort_hits(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

Bm25Index Bm25Index::build(const std::vector<Chunk>& chunks, Bm25Params params) {
    Bm25Index index;
    index.params_ = params;
    std::size_t total = 0;
    for (const Chunk& c : chunks) {
        auto tokens = text::analyze(c.text);
        std::unordered_map<std::string, std::size_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (const auto& [term, _] : tf) ++index.doc_freqs_[term];
        index.chunk_ids_.push_back(c.chunk_id);
        index.lengths_.push_back(tokens.size());
        index.term_freqs_.push_back(std::move(tf));
        total += tokens.size();
    }
    if (!chunks.empty()) {
        index.avg_length_ = static_cast<double>(total) / static_cast<double>(chunks.size());
    }
    return index;
}

std::size_t Bm25Index::document_frequency(const std::string& term) const {
    auto it = doc_freqs_.find(term);
    return it == doc_freqs_.end() ? 0 : it->second;
}

double Bm25Index::idf(const std::string& term) const {
    auto n = static_cast<double>(chunk_ids_.size());
    auto df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<Hit> Bm25Index::score_all(const std::string& query) const {
    auto terms = text::analyze(query);
    std::vector<double> idfs;
    idfs.reserve(terms.size());
    for (const auto& t : terms) idfs.push_back(idf(t));
    const double avg = avg_length_ > 0.0 ? avg_length_ : 1.0;

    std::vector<Hit> hits;
    hits.reserve(chunk_ids_.size());
    for (std::size_t i = 0; i < chunk_ids_.size(); ++i) {
        const auto& tf = term_freqs_[i];
        const double norm = params_.k1 * (1.0 - params_.b +
                                          params_.b * static_cast<double>(lengths_[i]) / avg);
        double score = 0.0;
        for (std::size_t q = 0; q < terms.size(); ++q) {
            auto it = tf.find(terms[q]);
            if (it == tf.end()) continue;
            auto f = static_cast<double>(it->second);
            score += idfs[q] * f * (params_.k1 + 1.0) / (f + norm);
        }
        hits.push_back({chunk_ids_[i], score});
    }
    return hits;
}

std::vector<Hit> Bm25Index::topk(const std::string& query, std::size_t k) const {
    if (k == 0) throw std::invalid_argument("k must be positive");
    auto hits = score_all(query);
    sort_hits(hits);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

}  // namespace lumber
