#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lumber::text {

bool is_space(char c) noexcept;

std::string_view trim(std::string_view s) noexcept;

/// True when `bytes` is well-formed UTF-8.
bool valid_utf8(std::string_view bytes) noexcept;

/// Collapses every whitespace run to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Lowercases ASCII letters, turns ASCII and common Unicode punctuation into
/// spaces, then collapses whitespace. Used for relevance and answer matching.
std::string normalize_for_matching(std::string_view s);

/// Lexical analyzer shared by BM25 and the mock embedder: lowercase ASCII,
/// split on anything that is not an ASCII letter or digit. Bytes >= 0x80 are
/// kept inside tokens so non-ASCII words survive intact.
std::vector<std::string> analyze(std::string_view s);

/// Splits into UTF-8 code points (each returned as a view into `s`).
std::vector<std::string_view> code_points(std::string_view s);

/// Whitespace-delimited words.
std::vector<std::string_view> words(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace lumber::text
