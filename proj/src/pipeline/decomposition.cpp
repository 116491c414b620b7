#include "dahl/pipeline/decomposition.hpp"

#include <algorithm>
#include <unordered_set>

#include "dahl/core/errors.hpp"
#include "dahl/core/text.hpp"
#include "dahl/pipeline/response.hpp"

namespace dahl::decomposition {
namespace {

// Returns the item text when `line` starts with a list marker.
std::optional<std::string_view> strip_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
    if (i + 1 == line.size() || text::is_space(line[i + 1])) return text::trim(line.substr(i + 1));
  }
  for (std::string_view bullet : {"-", "*", "\xE2\x80\xA2"}) {
    if (line.starts_with(bullet)) {
      const auto rest = line.substr(bullet.size());
      if (rest.empty() || text::is_space(rest.front())) return text::trim(rest);
    }
  }
  return std::nullopt;
}

}  // namespace

PromptTemplate default_splitter_template() {
  return PromptTemplate(
      "Break the response below into atomic units. An atomic unit is a single sentence that "
      "carries exactly one piece of information whose truth can be judged as true or false. "
      "Keep the original wording where possible and do not add information that is not in the "
      "response. Return the units as a numbered list, one unit per line.\n\n"
      "Response:\n{response}\n");
}

GenConfig default_splitter_config() { return GenConfig{0.0, 1024, std::nullopt}; }

std::vector<std::string> parse_splitter_output(std::string_view raw) {
  struct Line {
    std::string text;
    bool marked;
  };
  std::vector<Line> lines;
  bool any_marked = false;
  for (const auto& l : text::split_lines(raw)) {
    const auto t = text::trim(l);
    if (t.empty()) continue;
    if (auto item = strip_marker(t)) {
      any_marked = true;
      lines.push_back({std::string(*item), true});
    } else {
      lines.push_back({std::string(t), false});
    }
  }
  std::vector<std::string> units;
  for (auto& line : lines) {
    if (any_marked && !line.marked) continue;
    if (!line.text.empty()) units.push_back(std::move(line.text));
  }
  if (units.empty()) throw ParseError("splitter output contains no units", std::string(raw));
  return units;
}

EvalRecord split_into_units(EvalRecord record, llm::ChatBackend& splitter,
                            const PromptTemplate& tmpl, const GenConfig& cfg,
                            const UnitValidationOptions& checks) {
  if (record.status != RecordStatus::Preprocessed || !record.preprocessed ||
      record.preprocessed->empty()) {
    throw PreconditionError("split_into_units requires a preprocessed record with text");
  }
  std::string raw;
  try {
    llm::ChatRequest req{splitter.backend_id(), std::nullopt,
                         tmpl.render({{"response", *record.preprocessed}}), cfg};
    raw = splitter.complete(req).text;
    const auto texts = parse_splitter_output(raw);
    record.units.clear();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      record.units.push_back(AtomicUnit{i, texts[i], std::nullopt, std::nullopt});
    }
  } catch (const ParseError& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("split failed: ") + e.what() + "; raw splitter output: " + e.raw();
    return record;
  } catch (const Error& e) {
    record.status = RecordStatus::Failed;
    record.error = std::string("split failed: ") + e.what();
    return record;
  }
  record.status = RecordStatus::Split;
  for (const auto& d : validate_units(record, checks)) record.diagnostics.push_back(d.message);
  return record;
}

std::vector<UnitDiagnostic> validate_units(const EvalRecord& record,
                                           const UnitValidationOptions& opts) {
  std::vector<UnitDiagnostic> out;
  if (record.units.empty()) {
    out.push_back({UnitFlag::ZeroUnits, "zero_units: record has no atomic units"});
    return out;
  }
  const std::string_view response = record.preprocessed ? *record.preprocessed : record.raw_response;
  const auto response_len = text::utf8_length(response);
  for (const auto& u : record.units) {
    if (text::utf8_length(u.text) > response_len) {
      out.push_back({UnitFlag::UnitLongerThanResponse,
                     "unit_longer_than_response: unit " + std::to_string(u.index)});
    }
  }
  const auto sentences = std::max<std::size_t>(1, response::segment_sentences(response).size());
  if (static_cast<double>(record.units.size()) >
      static_cast<double>(sentences) * opts.max_units_per_sentence) {
    out.push_back({UnitFlag::CountAnomaly,
                   "count_anomaly: " + std::to_string(record.units.size()) + " units from " +
                       std::to_string(sentences) + " sentences"});
  }
  std::unordered_set<std::string> seen;
  for (const auto& u : record.units) {
    if (!seen.insert(response::normalized_key(u.text)).second) {
      out.push_back({UnitFlag::DuplicateUnits,
                     "duplicate_units: unit " + std::to_string(u.index) + " repeats an earlier unit"});
    }
  }
  return out;
}

}  // namespace dahl::decomposition
