#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dahl::text {

bool is_space(char c) noexcept;
bool is_alnum(char c) noexcept;

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

/// Collapses every whitespace run to a single space and trims both ends.
std::string collapse_whitespace(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view s);

/// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t utf8_length(std::string_view s) noexcept;

/// Replaces typographic apostrophes/quotes with their ASCII forms.
std::string ascii_quotes(std::string_view s);

/// True when `needle` occurs in `hay` at `pos` with non-alphanumeric characters
/// (or string edges) on both sides.
bool bounded_match_at(std::string_view hay, std::string_view needle, std::size_t pos) noexcept;

/// Reads lines of a plain-text list file: trimmed, blank lines and '#' comments skipped.
std::vector<std::string> read_list_file(const std::string& path);

}  // namespace dahl::text
