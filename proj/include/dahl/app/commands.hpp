#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dahl/app/config.hpp"
#include "dahl/dataset/builder.hpp"
#include "dahl/scoring/scoring.hpp"
#include "dahl/stats/tests.hpp"

namespace dahl::app {

/// Progress sink; may be empty.
using Logger = std::function<void(std::string_view)>;

/// Raised for invalid command-line usage (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Stage { Generate, Preprocess, Split, Check, Score };

std::string_view to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;

// ---- build-dataset -------------------------------------------------------

struct BuildDatasetOptions {
  fs::path corpus;
  fs::path out_dir;
  std::optional<fs::path> rules;      // overrides the config's rules file
  std::optional<fs::path> overrides;  // overrides the config's override list
};

/// Writes out_dir/questions.jsonl and out_dir/build_report.json.
dataset::BuildResult run_build_dataset(const RunConfig& cfg, const BuildDatasetOptions& opts,
                                       const Logger& log = {});

// ---- evaluate ------------------------------------------------------------

struct EvaluateOptions {
  fs::path out_dir;  // records.jsonl and report.* land here
  std::string generator;
  bool resume = false;
  std::optional<Stage> stop_after;
  std::optional<double> temperature;  // replaces the configured generation temperature
  std::vector<scoring::ReportFormat> formats{scoring::ReportFormat::Json, scoring::ReportFormat::Csv,
                                             scoring::ReportFormat::Markdown};
};

struct EvaluateResult {
  std::vector<EvalRecord> records;
  std::optional<ScoreReport> report;  // absent when stopped before scoring
};

/// generate -> preprocess -> split -> check -> score for one generator.
/// records.jsonl is rewritten after every stage. With `resume`, an existing
/// records.jsonl is loaded and each record only runs the stages it has not
/// passed. Throws NoScorableResponses (after persisting records) when the
/// score stage finds nothing to score.
EvaluateResult run_evaluate(const RunConfig& cfg, const Resources& res, const BackendRegistry& registry,
                            std::span<const Question> questions, const EvaluateOptions& opts,
                            const Logger& log = {});

/// Loads and validates a questions file against the category set.
std::vector<Question> load_questions(const fs::path& path, const CategorySet& categories);

// ---- score ---------------------------------------------------------------

/// Scores a finished records file; one report per model.
std::vector<ScoreReport> score_records(std::span<const EvalRecord> records,
                                       const std::map<std::string, std::string>& model_sizes = {});

void write_reports(const ScoreReport& report, const fs::path& out_dir,
                   std::span<const scoring::ReportFormat> formats);

// ---- ablate-temperature --------------------------------------------------

/// "0.1,0.2,0.5" or "start:stop:step" (inclusive, rounded to 1e-9).
std::vector<double> parse_temperatures(std::string_view spec);

struct AblationOptions {
  std::vector<double> temperatures;
  double fraction = 0.1;
  std::uint64_t seed = 0;
  fs::path out_dir;
  std::vector<std::string> models;  // empty = every configured generator
  bool allow_high_temperature = false;
  bool resume = false;
};

struct AblationRow {
  std::string model;
  double temperature = 0.0;
  std::optional<double> dahl_score;  // absent when nothing was scorable
  std::size_t n_scored = 0;
};

/// Draws one stratified sample, evaluates it at each temperature per model
/// and writes out_dir/sample.jsonl and out_dir/ablation.csv.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Resources& res,
                                      const BackendRegistry& registry,
                                      std::span<const Question> questions, const AblationOptions& opts,
                                      const Logger& log = {});

std::string render_ablation_csv(std::span<const AblationRow> rows);

/// Shortest decimal spelling that round-trips at 1e-9 ("0.1", "1", "0.25").
std::string format_temperature(double t);

// ---- compare-human -------------------------------------------------------

struct HumanScore {
  std::string question_id;
  std::vector<double> scores;  // one per annotator column
};

/// CSV "question_id,score[,score2...]" with an optional header row.
std::vector<HumanScore> read_human_scores(const fs::path& path);

enum class Reduce { None, Mean };

struct ComparisonResult {
  stats::TestResult test;
  std::size_t n = 0;
};

/// Pairs scorable automated precisions with human scores by question id.
/// Several score columns require Reduce::Mean. Throws PreconditionError
/// listing unmatched ids on either side.
ComparisonResult compare_human(std::span<const EvalRecord> records, std::span<const HumanScore> human,
                               Reduce reduce);

// ---- stats ---------------------------------------------------------------

/// Two numeric columns from CSV ("x,y", blank cells allowed, optional header)
/// or JSONL ({"x": .., "y": ..}, either key optional per line).
struct Columns {
  std::vector<double> x;
  std::vector<double> y;
};

Columns read_columns(const fs::path& path);

Json to_json(const stats::TestResult& r);

}  // namespace dahl::app
