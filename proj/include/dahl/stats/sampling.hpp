#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dahl/core/types.hpp"

namespace dahl::stats {

/// mt19937_64 with an explicit bounded-integer draw, so sampled subsets are
/// identical on every standard library.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  /// Uniform integer in [0, bound). `bound` must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Hamilton (largest remainder) apportionment of `target` seats over
/// categories with the given sizes. Ties on the remainder go to the larger
/// category, then to the lexicographically smaller name.
std::map<std::string, std::size_t> largest_remainder(const std::map<std::string, std::size_t>& sizes,
                                                     std::size_t target);

/// Draws round(fraction * N) questions while keeping the category
/// proportions (largest remainder), picking within each category by a seeded
/// uniform shuffle. Output preserves input order.
std::vector<Question> stratified_sample(std::span<const Question> questions, double fraction,
                                        std::uint64_t seed);

}  // namespace dahl::stats
