#include "lumber/tokens.hpp"

#include "lumber/text.hpp"

namespace lumber {

std::size_t WordTokenCounter::count(std::string_view text) const {
    std::size_t words = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = text::is_space(c);
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return (words * 4 + 2) / 3;
}

const TokenCounter& default_token_counter() {
    static const WordTokenCounter counter;
    return counter;
}

}  // namespace lumber
