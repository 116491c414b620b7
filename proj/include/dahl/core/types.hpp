#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dahl {

/// Three-valued factuality label for one atomic unit.
enum class Verdict { True, False, Unknown };

enum class ReviewOverride { None, ForceKeep, ForceDrop };

enum class FinishReason { Stop, Length, Other };

/// Pipeline stage of an EvalRecord. The first five values form the main
/// line; excluded_* and failed are terminal branches.
enum class RecordStatus {
  Pending,
  Preprocessed,
  Split,
  Checked,
  Scored,
  ExcludedNoncommittal,
  ExcludedUnknown,
  ExcludedMismatch,
  Failed,
};

std::string_view to_string(Verdict v) noexcept;
std::string_view to_string(ReviewOverride o) noexcept;
std::string_view to_string(FinishReason f) noexcept;
std::string_view to_string(RecordStatus s) noexcept;

std::optional<Verdict> parse_verdict(std::string_view s) noexcept;
std::optional<ReviewOverride> parse_review_override(std::string_view s) noexcept;
std::optional<FinishReason> parse_finish_reason(std::string_view s) noexcept;
std::optional<RecordStatus> parse_record_status(std::string_view s) noexcept;

bool is_terminal(RecordStatus s) noexcept;

/// Position on the main line (pending=0 ... scored=4); nullopt for branches.
std::optional<int> stage_rank(RecordStatus s) noexcept;

/// Monotone transition rule: forward along the main line, or from any
/// non-terminal status into a terminal branch.
bool can_transition(RecordStatus from, RecordStatus to) noexcept;

struct CategoryLabel {
  std::string name;

  friend auto operator<=>(const CategoryLabel&, const CategoryLabel&) = default;
};

struct SourceDocument {
  std::string doc_id;
  std::string title;
  std::string body;

  friend bool operator==(const SourceDocument&, const SourceDocument&) = default;
};

struct Question {
  std::string question_id;
  std::string text;
  CategoryLabel category;
  std::string source_doc_id;
  std::vector<std::string> filter_trace;
  ReviewOverride review_override = ReviewOverride::None;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Decoding parameters attached to every generated response.
struct GenConfig {
  static constexpr double kMaxTemperature = 2.0;

  double temperature = 0.6;
  int max_tokens = 256;
  std::optional<std::int64_t> seed;

  friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

/// Empty when valid; otherwise one message per violated bound.
std::vector<std::string> validate(const GenConfig& cfg);

struct AtomicUnit {
  std::size_t index = 0;
  std::string text;
  std::optional<Verdict> verdict;
  std::optional<std::string> checker_reply;  // kept for audit

  friend bool operator==(const AtomicUnit&, const AtomicUnit&) = default;
};

/// Full trajectory of one question through the evaluation pipeline.
struct EvalRecord {
  std::string question_id;
  std::string model_id;
  CategoryLabel category;
  GenConfig gen_config;
  std::string prompt;
  std::string raw_response;
  std::optional<FinishReason> finish_reason;
  std::optional<std::string> preprocessed;
  std::vector<AtomicUnit> units;
  std::vector<std::string> diagnostics;
  RecordStatus status = RecordStatus::Pending;
  std::optional<std::string> error;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct CategoryScore {
  double score = 0.0;
  std::size_t n = 0;

  friend bool operator==(const CategoryScore&, const CategoryScore&) = default;
};

struct ScoreReport {
  std::string model_id;
  std::string model_size = "?";
  double dahl_score = 0.0;
  std::map<std::string, CategoryScore> per_category;
  std::size_t n_total = 0;
  std::size_t n_scored = 0;
  std::size_t n_excluded_noncommittal = 0;
  std::size_t n_excluded_unknown = 0;
  std::size_t n_excluded_mismatch = 0;
  std::size_t n_failed = 0;
  /// Mean length (UTF-8 code points) of the preprocessed text of scored records.
  double avg_response_length_chars = 0.0;
  /// Same, measured on the raw model output.
  double avg_raw_response_length_chars = 0.0;
  /// True units over all units of scored records. Auxiliary; not the DAHL Score.
  double pooled_unit_precision = 0.0;

  friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

}  // namespace dahl
