#include "dahl/core/categories.hpp"

#include <algorithm>

#include "dahl/core/errors.hpp"
#include "dahl/core/text.hpp"

namespace dahl {

CategorySet::CategorySet(std::vector<std::string> labels, std::string fallback)
    : fallback_(std::move(fallback)) {
  for (auto& raw : labels) {
    std::string label(text::trim(raw));
    if (label.empty()) throw ConfigError("category set contains an empty label");
    auto folded = text::to_lower(label);
    if (std::find(folded_.begin(), folded_.end(), folded) != folded_.end()) {
      throw ConfigError("duplicate category label: " + label);
    }
    labels_.push_back(std::move(label));
    folded_.push_back(std::move(folded));
  }
  if (!find(fallback_)) {
    throw ConfigError("category set must contain the fallback label '" + fallback_ + "'");
  }
}

CategorySet CategorySet::load(const std::string& path) {
  return CategorySet(text::read_list_file(path));
}

std::optional<CategoryLabel> CategorySet::find(std::string_view name) const {
  const auto folded = text::to_lower(text::trim(name));
  for (std::size_t i = 0; i < folded_.size(); ++i) {
    if (folded_[i] == folded) return CategoryLabel{labels_[i]};
  }
  return std::nullopt;
}

bool CategorySet::contains(const CategoryLabel& label) const {
  return std::find(labels_.begin(), labels_.end(), label.name) != labels_.end();
}

}  // namespace dahl
