#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dahl/core/errors.hpp"
#include "dahl/core/types.hpp"

namespace dahl::scoring {

/// Raised when a run has no record with a definite verdict list.
class NoScorableResponses : public Error {
 public:
  NoScorableResponses() : Error("no scorable responses") {}
};

/// Fraction of True verdicts. Throws PreconditionError on an empty list or
/// when an Unknown is present (such records must be excluded upstream).
double response_precision(std::span<const Verdict> verdicts);

/// Precision of a checked/scored record, read from its unit verdicts.
double response_precision(const EvalRecord& record);

/// Status checked or scored.
bool is_scorable(const EvalRecord& record) noexcept;

/// Moves every checked record to scored.
void mark_scored(std::span<EvalRecord> records);

/// Unweighted mean of per-response precision over scorable records, plus
/// exclusion buckets and length statistics. All records must belong to one
/// model and have finished the pipeline (checked, scored, excluded_* or
/// failed). Sums run over sorted values, so record order cannot change any
/// reported number.
ScoreReport dahl_score(std::span<const EvalRecord> records, std::string model_size = "?");

/// Mean precision per category over scorable records; empty categories are omitted.
std::map<std::string, CategoryScore> per_category_scores(std::span<const EvalRecord> records);

enum class ReportFormat { Json, Csv, Markdown };

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept;
std::string_view file_extension(ReportFormat f) noexcept;

std::string render_report(const ScoreReport& report, ReportFormat format);

/// Same, with the format given by name ("json", "csv", "markdown"/"md").
/// Throws PreconditionError for anything else.
std::string render_report(const ScoreReport& report, std::string_view format);

/// Model / Size / Avg. Length / DAHL Score table over several runs.
std::string render_markdown_table(std::span<const ScoreReport> reports);

ScoreReport parse_report_json(std::string_view json);

}  // namespace dahl::scoring
