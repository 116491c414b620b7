#include "dahl/core/types.hpp"

#include <array>
#include <utility>

namespace dahl {
namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table,
                        std::string_view s) noexcept {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table,
                         E v) noexcept {
  for (const auto& [value, name] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<Verdict, std::string_view>, 3> kVerdicts{{
    {Verdict::True, "true"},
    {Verdict::False, "false"},
    {Verdict::Unknown, "unknown"},
}};

constexpr std::array<std::pair<ReviewOverride, std::string_view>, 3> kOverrides{{
    {ReviewOverride::None, "none"},
    {ReviewOverride::ForceKeep, "force_keep"},
    {ReviewOverride::ForceDrop, "force_drop"},
}};

constexpr std::array<std::pair<FinishReason, std::string_view>, 3> kFinish{{
    {FinishReason::Stop, "stop"},
    {FinishReason::Length, "length"},
    {FinishReason::Other, "other"},
}};

constexpr std::array<std::pair<RecordStatus, std::string_view>, 9> kStatuses{{
    {RecordStatus::Pending, "pending"},
    {RecordStatus::Preprocessed, "preprocessed"},
    {RecordStatus::Split, "split"},
    {RecordStatus::Checked, "checked"},
    {RecordStatus::Scored, "scored"},
    {RecordStatus::ExcludedNoncommittal, "excluded_noncommittal"},
    {RecordStatus::ExcludedUnknown, "excluded_unknown"},
    {RecordStatus::ExcludedMismatch, "excluded_mismatch"},
    {RecordStatus::Failed, "failed"},
}};

}  // namespace

std::string_view to_string(Verdict v) noexcept { return name_of(kVerdicts, v); }
std::string_view to_string(ReviewOverride o) noexcept { return name_of(kOverrides, o); }
std::string_view to_string(FinishReason f) noexcept { return name_of(kFinish, f); }
std::string_view to_string(RecordStatus s) noexcept { return name_of(kStatuses, s); }

std::optional<Verdict> parse_verdict(std::string_view s) noexcept { return lookup(kVerdicts, s); }
std::optional<ReviewOverride> parse_review_override(std::string_view s) noexcept {
  return lookup(kOverrides, s);
}
std::optional<FinishReason> parse_finish_reason(std::string_view s) noexcept {
  return lookup(kFinish, s);
}
std::optional<RecordStatus> parse_record_status(std::string_view s) noexcept {
  return lookup(kStatuses, s);
}

bool is_terminal(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::Scored:
    case RecordStatus::ExcludedNoncommittal:
    case RecordStatus::ExcludedUnknown:
    case RecordStatus::ExcludedMismatch:
    case RecordStatus::Failed:
      return true;
    default:
      return false;
  }
}

std::optional<int> stage_rank(RecordStatus s) noexcept {
  switch (s) {
    case RecordStatus::Pending: return 0;
    case RecordStatus::Preprocessed: return 1;
    case RecordStatus::Split: return 2;
    case RecordStatus::Checked: return 3;
    case RecordStatus::Scored: return 4;
    default: return std::nullopt;
  }
}

bool can_transition(RecordStatus from, RecordStatus to) noexcept {
  if (is_terminal(from)) return false;
  const auto rf = stage_rank(from);
  const auto rt = stage_rank(to);
  if (rt) return *rt > *rf;
  return true;
}

std::vector<std::string> validate(const GenConfig& cfg) {
  std::vector<std::string> out;
  if (!(cfg.temperature >= 0.0)) out.emplace_back("temperature must be >= 0");
  if (cfg.temperature > GenConfig::kMaxTemperature) out.emplace_back("temperature must be <= 2.0");
  if (cfg.max_tokens < 1) out.emplace_back("max_tokens must be >= 1");
  return out;
}

}  // namespace dahl
