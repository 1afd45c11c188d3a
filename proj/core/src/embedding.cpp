#include "lumber/embedding.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "io.hpp"
#include "lumber/error.hpp"
#include "lumber/hash.hpp"
#include "lumber/text.hpp"

namespace lumber {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string cache_key(const std::string& backend, const std::string& hash) {
    return backend + '\x1f' + hash;
}

}  // namespace

void normalize(Vector& v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    if (sq == 0.0) {
        if (!v.empty()) v[0] = 1.0F;
        return;
    }
    double inv = 1.0 / std::sqrt(sq);
    for (float& x : v) x = static_cast<float>(x * inv);
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionMismatchError(a.size(), b.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
    if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::string MockEmbedder::backend_id() const {
    return "mock:d" + std::to_string(dimension_) + ":s" + std::to_string(seed_);
}

Vector MockEmbedder::embed_one(const std::string& text) const {
    std::vector<double> acc(dimension_, 0.0);
    for (const std::string& token : text::analyze(text)) {
        std::uint64_t state = fnv1a64(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL);
        for (double& a : acc) {
            // Uniform in [-1, 1).
            a += static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
        }
    }
    Vector v(acc.begin(), acc.end());
    normalize(v);
    return v;
}

std::vector<Vector> MockEmbedder::embed(std::span<const std::string> texts) {
    ++calls_;
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(embed_one(t));
    return out;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
    if (!std::filesystem::exists(*file_)) return;
    std::string content = io::read_file(*file_);
    std::size_t line_no = 0;
    for (std::string_view line : io::lines(content)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto record = nlohmann::json::parse(line);
            entries_[cache_key(record.at("backend").get<std::string>(),
                               record.at("text_hash").get<std::string>())] =
                record.at("vector").get<Vector>();
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(file_->string(), line_no, e.what());
        }
    }
}

std::optional<Vector> EmbeddingCache::lookup(const std::string& backend,
                                             const std::string& text_hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(cache_key(backend, text_hash));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void EmbeddingCache::store(const std::string& backend, const std::string& text_hash,
                           const Vector& v) {
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign(cache_key(backend, text_hash), v);
    if (!file_) return;
    nlohmann::ordered_json record;
    record["backend"] = backend;
    record["text_hash"] = text_hash;
    record["vector"] = v;
    io::append_line(*file_, record.dump());
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

std::vector<Vector> CachingEmbedder::embed(std::span<const std::string> texts) {
    const std::string backend = inner_.backend_id();
    std::vector<Vector> out(texts.size());
    std::vector<std::string> hashes(texts.size());
    std::vector<std::string> missing;
    std::vector<std::string> missing_hashes;
    std::unordered_set<std::string> queued;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        hashes[i] = sha256_hex(texts[i]);
        if (auto v = cache_.lookup(backend, hashes[i])) {
            out[i] = std::move(*v);
        } else if (queued.insert(hashes[i]).second) {
            missing.push_back(texts[i]);
            missing_hashes.push_back(hashes[i]);
        }
    }
    if (!missing.empty()) {
        backend_calls_ += (missing.size() + batch_size_ - 1) / batch_size_;
        auto vectors = embed_batched(inner_, missing, batch_size_);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            cache_.store(backend, missing_hashes[i], vectors[i]);
        }
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (out[i].empty()) out[i] = *cache_.lookup(backend, hashes[i]);
        }
    }
    return out;
}

std::vector<Vector> embed_batched(EmbeddingBackend& backend, std::span<const std::string> texts,
                                  std::size_t batch_size) {
    if (batch_size == 0) batch_size = 1;
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t first = 0; first < texts.size(); first += batch_size) {
        auto batch = texts.subspan(first, std::min(batch_size, texts.size() - first));
        std::vector<Vector> vectors;
        try {
            vectors = backend.embed(batch);
        } catch (const EmbeddingError&) {
            throw;
        } catch (const std::exception& e) {
            throw EmbeddingError(first, e.what());
        }
        if (vectors.size() != batch.size()) {
            throw EmbeddingError(first, "backend returned " + std::to_string(vectors.size()) +
                                            " vectors for " + std::to_string(batch.size()) +
                                            " texts");
        }
        for (Vector& v : vectors) {
            if (!out.empty() && v.size() != out.front().size()) {
                throw EmbeddingError(first, "inconsistent vector dimension");
            }
            out.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace lumber
