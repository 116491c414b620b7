#include "dahl/core/prompt.hpp"

#include "dahl/core/errors.hpp"
#include "dahl/core/records.hpp"

namespace dahl {

PromptTemplate PromptTemplate::load(const std::string& path) {
  return PromptTemplate(read_file(path));
}

bool PromptTemplate::has_placeholder(std::string_view name) const {
  const std::string token = "{" + std::string(name) + "}";
  return source_.find(token) != std::string::npos;
}

void PromptTemplate::require(std::initializer_list<std::string_view> names) const {
  for (auto name : names) {
    if (!has_placeholder(name)) {
      throw ConfigError("prompt template lacks placeholder {" + std::string(name) + "}");
    }
  }
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string, std::less<>>& values) const {
  std::string out;
  out.reserve(source_.size());
  std::size_t i = 0;
  while (i < source_.size()) {
    if (source_[i] == '{') {
      const auto close = source_.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string_view key(source_.data() + i + 1, close - i - 1);
        if (auto it = values.find(key); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(source_[i++]);
  }
  return out;
}

}  // namespace dahl
