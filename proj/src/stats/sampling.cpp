#include "dahl/stats/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dahl/core/errors.hpp"

namespace dahl::stats {

SeededRng::SeededRng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound == 0) throw PreconditionError("SeededRng::below requires bound > 0");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t v = engine_();
    if (v < limit) return v % bound;
  }
}

std::map<std::string, std::size_t> largest_remainder(const std::map<std::string, std::size_t>& sizes,
                                                     std::size_t target) {
  std::size_t total = 0;
  for (const auto& [name, n] : sizes) total += n;
  std::map<std::string, std::size_t> seats;
  if (total == 0) return seats;
  if (target > total) throw PreconditionError("apportionment target exceeds population");

  struct Entry {
    const std::string* name;
    std::size_t size;
    std::size_t remainder;
  };
  std::vector<Entry> entries;
  std::size_t assigned = 0;
  for (const auto& [name, n] : sizes) {
    // Exact integer quota: target * n / total.
    const auto product = static_cast<unsigned __int128>(target) * n;
    const auto floor_seats = static_cast<std::size_t>(product / total);
    seats[name] = floor_seats;
    assigned += floor_seats;
    entries.push_back({&name, n, static_cast<std::size_t>(product % total)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    if (a.size != b.size) return a.size > b.size;
    return *a.name < *b.name;
  });
  for (std::size_t i = 0; assigned < target; ++i, ++assigned) ++seats[*entries[i].name];
  return seats;
}

std::vector<Question> stratified_sample(std::span<const Question> questions, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw PreconditionError("sample fraction must lie in (0, 1]");
  }
  if (questions.empty()) return {};

  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& name = questions[i].category.name;
    if (name.empty()) {
      throw PreconditionError("question " + questions[i].question_id + " is not categorized");
    }
    by_category[name].push_back(i);
  }
  std::map<std::string, std::size_t> sizes;
  for (const auto& [name, idx] : by_category) sizes[name] = idx.size();

  const auto target = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(questions.size())));
  const auto seats = largest_remainder(sizes, std::min(target, questions.size()));

  SeededRng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [name, idx] : by_category) {
    rng.shuffle(idx);
    const auto k = seats.at(name);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::sort(chosen.begin(), chosen.end());

  std::vector<Question> out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(questions[i]);
  return out;
}

}  // namespace dahl::stats
