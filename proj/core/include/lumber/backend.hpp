#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "lumber/error.hpp"

namespace lumber {

/// A text-completion service. `system` may be empty.
///
/// Implementations: a live HTTP chat client (http_backend.hpp), a scripted
/// function for tests, and a replay backend reading a response cache file.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;

    std::string complete(std::string_view prompt, double temperature) {
        return do_complete({}, prompt, temperature);
    }
    std::string complete(std::string_view system, std::string_view prompt, double temperature) {
        return do_complete(system, prompt, temperature);
    }

    /// Identifies the model behind the backend; part of the cache key.
    virtual std::string model_id() const = 0;

protected:
    virtual std::string do_complete(std::string_view system, std::string_view prompt,
                                    double temperature) = 0;
};

/// Hash of a (system, prompt) pair as stored in response cache records.
std::string prompt_hash(std::string_view system, std::string_view prompt);

/// Deterministic stand-in driven by a function of the prompt.
class ScriptedBackend final : public CompletionBackend {
public:
    using Script = std::function<std::string(std::string_view system, std::string_view prompt)>;

    explicit ScriptedBackend(Script script, std::string model = "scripted");
    /// Convenience for scripts that ignore the system prompt.
    static std::unique_ptr<ScriptedBackend> from_prompt(
        std::function<std::string(std::string_view prompt)> fn, std::string model = "scripted");

    std::string model_id() const override { return model_; }
    std::size_t calls() const noexcept { return calls_.load(); }

protected:
    std::string do_complete(std::string_view system, std::string_view prompt,
                            double temperature) override;

private:
    Script script_;
    std::string model_;
    std::atomic<std::size_t> calls_{0};
};

/// On-disk response cache: one JSON record per line,
/// {"model": ..., "prompt_hash": ..., "response": ...}.
/// Appends are serialized by a mutex and written as a single line, so
/// concurrent writers with distinct keys never interleave records.
class ResponseCache {
public:
    enum class Mode { read_write, read_only };

    ResponseCache() = default;  // memory only
    /// Loads `file` if it exists. In read_write mode new entries are appended
    /// to it; in read_only mode they stay in memory.
    explicit ResponseCache(std::filesystem::path file, Mode mode = Mode::read_write);

    std::optional<std::string> lookup(const std::string& model, const std::string& hash) const;
    void store(const std::string& model, const std::string& hash, const std::string& response);
    std::size_t size() const;
    const std::optional<std::filesystem::path>& file() const noexcept { return file_; }

private:
    static std::string key(const std::string& model, const std::string& hash);

    std::optional<std::filesystem::path> file_;
    Mode mode_ = Mode::read_write;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> entries_;
};

/// Serves from the cache, falls through to `inner` on a miss and records it.
class CachingBackend final : public CompletionBackend {
public:
    CachingBackend(CompletionBackend& inner, ResponseCache& cache) : inner_(inner), cache_(cache) {}

    std::string model_id() const override { return inner_.model_id(); }
    std::size_t hits() const noexcept { return hits_.load(); }
    std::size_t misses() const noexcept { return misses_.load(); }

protected:
    std::string do_complete(std::string_view system, std::string_view prompt,
                            double temperature) override;

private:
    CompletionBackend& inner_;
    ResponseCache& cache_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

/// Replays a response cache file byte-exactly; a missing entry is a
/// BackendError.
class ReplayBackend final : public CompletionBackend {
public:
    ReplayBackend(const std::filesystem::path& cache_file, std::string model);

    std::string model_id() const override { return model_; }

protected:
    std::string do_complete(std::string_view system, std::string_view prompt,
                            double temperature) override;

private:
    ResponseCache cache_;
    std::string model_;
};

/// Calls `fn` up to 1 + max_retries times while it throws BackendError.
template <typename Fn>
auto with_retries(std::size_t max_retries, Fn&& fn) -> decltype(fn()) {
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const BackendError&) {
            if (attempt >= max_retries) throw;
        }
    }
}

}  // namespace lumber
