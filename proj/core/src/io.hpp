#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lumber::io {

/// Whole-file read. Throws CorpusError naming the path if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Appends one line (a trailing '\n' is added).
void append_line(const std::filesystem::path& path, std::string_view line);

/// Splits on '\n', dropping a trailing '\r' from each line. A final empty
/// line is not reported.
std::vector<std::string_view> lines(std::string_view content);

}  // namespace lumber::io
