#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dahl/core/types.hpp"

namespace dahl {

/// Closed set of category labels, loaded from a one-label-per-line file.
/// The fallback label ("Other" by default) must be a member.
class CategorySet {
 public:
  static constexpr std::string_view kDefaultFallback = "Other";

  explicit CategorySet(std::vector<std::string> labels,
                       std::string fallback = std::string(kDefaultFallback));

  static CategorySet load(const std::string& path);

  /// Case-insensitive, whitespace-trimmed exact lookup.
  std::optional<CategoryLabel> find(std::string_view name) const;
  bool contains(const CategoryLabel& label) const;

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  CategoryLabel fallback() const { return CategoryLabel{fallback_}; }
  std::size_t size() const noexcept { return labels_.size(); }

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> folded_;
  std::string fallback_;
};

}  // namespace dahl
