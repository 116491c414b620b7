#include "dahl/pipeline/verification.hpp"

#include <optional>
#include <vector>

#include "dahl/core/errors.hpp"
#include "dahl/core/parallel.hpp"

namespace dahl::verification {
namespace {

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : raw) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || c == '\'') {
      cur.push_back(c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

bool is_any(const std::string& t, std::initializer_list<std::string_view> words) {
  for (auto w : words) {
    if (t == w) return true;
  }
  return false;
}

}  // namespace

PromptTemplate default_checker_template() {
  return PromptTemplate(
      "Decide whether the following statement is factually accurate, consulting reliable "
      "sources. Answer with a single word: true, false, or unknown if the statement cannot be "
      "verified.\n\nStatement: {unit}\n");
}

GenConfig default_checker_config() { return GenConfig{0.0, 64, std::nullopt}; }

Verdict parse_checker_output(std::string_view raw) {
  const auto tokens = tokenize(raw);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (is_any(t, {"unknown", "uncertain", "unverifiable"})) return Verdict::Unknown;
    if (i + 1 < tokens.size() && tokens[i + 1] == "verify" &&
        is_any(t, {"cannot", "can't", "cant"})) {
      return Verdict::Unknown;
    }
    if (i + 2 < tokens.size() && tokens[i + 2] == "verify" &&
        ((t == "can" && tokens[i + 1] == "not") || (t == "unable" && tokens[i + 1] == "to"))) {
      return Verdict::Unknown;
    }
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (is_any(t, {"false", "incorrect", "no"})) return Verdict::False;
    if (is_any(t, {"true", "correct", "yes"})) {
      // "not true" / "isn't correct" read as a negative.
      if (i > 0 && is_any(tokens[i - 1], {"not", "isn't", "isnt"})) return Verdict::False;
      return Verdict::True;
    }
  }
  return Verdict::Unknown;
}

UnitCheck check_unit(const AtomicUnit& unit, llm::ChatBackend& checker, const PromptTemplate& tmpl,
                     const GenConfig& cfg) {
  if (unit.text.empty()) throw PreconditionError("atomic unit text must be non-empty");
  llm::ChatRequest req{checker.backend_id(), std::nullopt, tmpl.render({{"unit", unit.text}}), cfg};
  auto resp = checker.complete(req);
  return UnitCheck{parse_checker_output(resp.text), std::move(resp.text)};
}

EvalRecord check_response(EvalRecord record, llm::ChatBackend& checker, const PromptTemplate& tmpl,
                          const GenConfig& cfg, std::size_t workers) {
  if (record.status != RecordStatus::Split) {
    throw PreconditionError("check_response requires status split, got " +
                            std::string(to_string(record.status)));
  }
  const auto n = record.units.size();
  std::vector<std::optional<UnitCheck>> results(n);
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      results[i] = check_unit(record.units[i], checker, tmpl, cfg);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::size_t obtained = 0;
  bool any_unknown = false;
  std::string first_error;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) {
      ++obtained;
      record.units[i].verdict = results[i]->verdict;
      record.units[i].checker_reply = std::move(results[i]->reply);
      any_unknown = any_unknown || results[i]->verdict == Verdict::Unknown;
    } else if (first_error.empty()) {
      first_error = "unit " + std::to_string(i) + ": " + errors[i];
    }
  }

  if (obtained == 0 && n > 0) {
    record.status = RecordStatus::Failed;
    record.error = "check failed: " + first_error;
  } else if (obtained != n) {
    record.status = RecordStatus::ExcludedMismatch;
    record.error = std::to_string(obtained) + " verdicts for " + std::to_string(n) +
                   " units; " + first_error;
  } else if (any_unknown) {
    record.status = RecordStatus::ExcludedUnknown;
  } else {
    record.status = RecordStatus::Checked;
  }
  return record;
}

}  // namespace dahl::verification
