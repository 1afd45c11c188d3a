#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace lumber {

/// Measures text length in tokens. Implementations must be deterministic.
class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

/// Approximates subword tokenization: ceil(words * 4 / 3).
class WordTokenCounter final : public TokenCounter {
public:
    std::size_t count(std::string_view text) const override;
    std::string name() const override { return "words*4/3"; }
};

const TokenCounter& default_token_counter();

inline std::size_t count_tokens(std::string_view text,
                                const TokenCounter& counter = default_token_counter()) {
    return counter.count(text);
}

}  // namespace lumber
