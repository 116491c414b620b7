#include "dahl/core/text.hpp"

#include <fstream>

#include "dahl/core/errors.hpp"

namespace dahl::text {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_alnum(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}

std::string_view trim(std::string_view s) noexcept {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    auto line = s.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

std::size_t utf8_length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (char c : s) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string ascii_quotes(std::string_view s) {
  static constexpr std::string_view kRight = "\xE2\x80\x99";
  static constexpr std::string_view kLeft = "\xE2\x80\x98";
  static constexpr std::string_view kLdq = "\xE2\x80\x9C";
  static constexpr std::string_view kRdq = "\xE2\x80\x9D";
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto rest = s.substr(i);
    if (rest.starts_with(kRight) || rest.starts_with(kLeft)) {
      out.push_back('\'');
      i += 3;
    } else if (rest.starts_with(kLdq) || rest.starts_with(kRdq)) {
      out.push_back('"');
      i += 3;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

bool bounded_match_at(std::string_view hay, std::string_view needle, std::size_t pos) noexcept {
  if (needle.empty() || pos + needle.size() > hay.size()) return false;
  if (hay.substr(pos, needle.size()) != needle) return false;
  if (pos > 0 && is_alnum(hay[pos - 1]) && is_alnum(needle.front())) return false;
  const auto end = pos + needle.size();
  if (end < hay.size() && is_alnum(hay[end]) && is_alnum(needle.back())) return false;
  return true;
}

std::vector<std::string> read_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open list file: " + path);
  std::vector<std::string> items;
  std::string line;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    items.emplace_back(t);
  }
  return items;
}

}  // namespace dahl::text
