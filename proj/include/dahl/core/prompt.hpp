#pragma once

#include <initializer_list>
#include <map>
#include <string>
#include <string_view>

namespace dahl {

/// Plain-text prompt with `{name}` placeholders.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string source) : source_(std::move(source)) {}

  static PromptTemplate load(const std::string& path);

  bool has_placeholder(std::string_view name) const;

  /// Throws ConfigError naming the first missing placeholder.
  void require(std::initializer_list<std::string_view> names) const;

  /// Substitutes known placeholders in a single left-to-right pass, so values
  /// containing braces are never re-expanded. Unknown placeholders stay verbatim.
  std::string render(const std::map<std::string, std::string, std::less<>>& values) const;

  const std::string& source() const noexcept { return source_; }

 private:
  std::string source_;
};

}  // namespace dahl
