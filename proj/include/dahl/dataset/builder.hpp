#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dahl/core/categories.hpp"
#include "dahl/core/prompt.hpp"
#include "dahl/core/records.hpp"
#include "dahl/core/types.hpp"
#include "dahl/llm/backend.hpp"

namespace dahl::dataset {

struct FilterRule {
  std::string rule_id;
  std::string pattern;  // ECMAScript regex, matched case-insensitively
  std::string description;

  friend bool operator==(const FilterRule&, const FilterRule&) = default;
};

void to_json(Json& j, const FilterRule& r);
void from_json(const Json& j, FilterRule& r);

/// Compiled, id-unique rule list.
class FilterRuleSet {
 public:
  FilterRuleSet() = default;
  explicit FilterRuleSet(std::vector<FilterRule> rules);

  /// JSONL file, one FilterRule per line.
  static FilterRuleSet load(const std::string& path);

  /// R1 demonstrative/possessive + study-like noun, R2 reporting participles,
  /// R3 was/were + past participle.
  static FilterRuleSet defaults();

  const std::vector<FilterRule>& rules() const noexcept { return rules_; }

  /// Ids of every rule whose pattern occurs in `question`, in rule order.
  std::vector<std::string> matching(std::string_view question) const;

 private:
  std::vector<FilterRule> rules_;
  std::vector<std::regex> compiled_;
};

struct FilterDecision {
  bool keep = true;
  std::vector<std::string> rule_ids;  // all matching rules; non-empty iff dropped

  friend bool operator==(const FilterDecision&, const FilterDecision&) = default;
};

FilterDecision filter_context_dependent(std::string_view question, const FilterRuleSet& rules);

/// Manual review decisions keyed by question text (whitespace-normalized) or id.
class OverrideList {
 public:
  OverrideList() = default;
  /// Throws ConfigError when an entry appears in both lists.
  OverrideList(std::vector<std::string> force_keep, std::vector<std::string> force_drop);

  /// JSON object with "force_keep" and "force_drop" string arrays.
  static OverrideList load(const std::string& path);

  ReviewOverride lookup(std::string_view question_id, std::string_view text) const;
  bool empty() const noexcept { return keep_.empty() && drop_.empty(); }

 private:
  std::set<std::string, std::less<>> keep_;
  std::set<std::string, std::less<>> drop_;
};

/// A generated question with its filter outcome, before categorization.
struct Candidate {
  Question question;  // category still empty
  bool keep = true;
};

/// force_keep turns a drop into a keep, force_drop the reverse; the applied
/// override is recorded on the question as provenance.
std::vector<Candidate> apply_review_overrides(std::vector<Candidate> candidates,
                                              const OverrideList& overrides);

struct CategoryMatch {
  CategoryLabel label;
  bool ambiguous = false;              // the reply named two or more labels
  std::vector<std::string> mentioned;  // labels found in the reply
};

/// Maps a categorizer reply onto the closed set: an exact (trimmed,
/// case-insensitive) label wins; otherwise labels mentioned as whole words are
/// collected, ignoring ones nested inside a longer mentioned label. No label
/// means the fallback ("Other").
CategoryMatch match_category(std::string_view reply, const CategorySet& categories);

PromptTemplate default_question_template();
PromptTemplate default_category_template();

/// Accepts numbered, bulleted or one-per-line output; keeps trimmed, distinct
/// items ending in '?' or '.'. Throws ParseError when none remain.
std::vector<std::string> parse_question_list(std::string_view raw);

std::vector<std::string> generate_questions(const SourceDocument& doc, llm::ChatBackend& backend,
                                            const PromptTemplate& tmpl = default_question_template(),
                                            int questions_per_doc = 5,
                                            const GenConfig& cfg = GenConfig{0.0, 1024, std::nullopt});

struct CategorizeResult {
  CategoryMatch match;
  std::string reply;
};

CategorizeResult categorize(std::string_view question, llm::ChatBackend& backend,
                            const CategorySet& categories,
                            const PromptTemplate& tmpl = default_category_template(),
                            const GenConfig& cfg = GenConfig{0.0, 32, std::nullopt});

enum class Outcome { Kept, DroppedFilter, DroppedOverride, DroppedAmbiguous, CategorizeFailed };

std::string_view to_string(Outcome o) noexcept;

struct DecisionEntry {
  std::string question_id;
  std::string doc_id;
  std::string text;
  std::vector<std::string> filter_trace;
  ReviewOverride review_override = ReviewOverride::None;
  Outcome outcome = Outcome::Kept;
  std::string category;  // empty unless categorized
};

struct BuildFailure {
  std::string id;  // doc id or question id
  std::string message;
};

struct BuildReport {
  std::size_t n_documents = 0;
  std::size_t n_documents_failed = 0;
  std::size_t n_candidates = 0;
  std::size_t n_filter_dropped = 0;
  std::size_t n_force_keep = 0;
  std::size_t n_force_drop = 0;
  std::size_t n_ambiguous = 0;
  std::size_t n_categorize_failed = 0;
  std::size_t n_kept = 0;
  std::map<std::string, std::size_t> per_rule;      // candidates matching each rule
  std::map<std::string, std::size_t> per_category;  // kept questions
  std::vector<BuildFailure> failures;
  std::vector<DecisionEntry> decisions;
};

Json to_json(const BuildReport& report);

struct BuildOptions {
  PromptTemplate question_template = default_question_template();
  PromptTemplate category_template = default_category_template();
  int questions_per_doc = 5;
  std::size_t workers = 1;
};

struct BuildResult {
  std::vector<Question> questions;
  BuildReport report;
};

/// generate -> filter -> override -> categorize, per document. A failing
/// document or question is isolated and listed in the report. Output order
/// follows the corpus order regardless of `workers`.
BuildResult build_dataset(std::span<const SourceDocument> corpus, llm::ChatBackend& generator,
                          llm::ChatBackend& categorizer, const FilterRuleSet& rules,
                          const OverrideList& overrides, const CategorySet& categories,
                          const BuildOptions& opts = {});

}  // namespace dahl::dataset
