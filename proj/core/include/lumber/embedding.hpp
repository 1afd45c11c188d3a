#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace lumber {

using Vector = std::vector<float>;

/// Maps texts to unit-norm vectors of a fixed dimension.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<Vector> embed(std::span<const std::string> texts) = 0;
    virtual std::string backend_id() const = 0;
};

/// Scales `v` to unit L2 norm. A zero vector becomes the first basis vector.
void normalize(Vector& v);

/// Offline embedder: every analyzed token is hashed (with the seed) into a
/// pseudo-random direction and the directions are summed over the token
/// multiset, then normalized. Word order is ignored.
class MockEmbedder final : public EmbeddingBackend {
public:
    explicit MockEmbedder(std::size_t dimension = 256, std::uint64_t seed = 0);

    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::string backend_id() const override;

    Vector embed_one(const std::string& text) const;
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
    std::atomic<std::size_t> calls_{0};
};

/// Sidecar cache of vectors keyed by (backend id, SHA-256 of text). Stored as
/// JSON lines {"backend": str, "text_hash": str, "vector": [float...]}. The
/// file may be deleted at any time.
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::filesystem::path file);

    std::optional<Vector> lookup(const std::string& backend, const std::string& text_hash) const;
    void store(const std::string& backend, const std::string& text_hash, const Vector& v);
    std::size_t size() const;

private:
    std::optional<std::filesystem::path> file_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Vector> entries_;
};

/// Serves cached vectors and forwards only misses, in batches, to `inner`.
class CachingEmbedder final : public EmbeddingBackend {
public:
    CachingEmbedder(EmbeddingBackend& inner, EmbeddingCache& cache, std::size_t batch_size = 64)
        : inner_(inner), cache_(cache), batch_size_(batch_size == 0 ? 1 : batch_size) {}

    std::vector<Vector> embed(std::span<const std::string> texts) override;
    std::string backend_id() const override { return inner_.backend_id(); }
    std::size_t backend_calls() const noexcept { return backend_calls_.load(); }

private:
    EmbeddingBackend& inner_;
    EmbeddingCache& cache_;
    std::size_t batch_size_;
    std::atomic<std::size_t> backend_calls_{0};
};

/// Embeds `texts` in batches; a failing batch is reported as EmbeddingError
/// naming the index of its first text.
std::vector<Vector> embed_batched(EmbeddingBackend& backend, std::span<const std::string> texts,
                                  std::size_t batch_size = 64);

double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace lumber
