#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dahl/core/prompt.hpp"
#include "dahl/core/types.hpp"
#include "dahl/llm/backend.hpp"

namespace dahl::decomposition {

PromptTemplate default_splitter_template();

/// Deterministic decoding for the splitter.
GenConfig default_splitter_config();

/// Accepts numbered lists ("1." / "1)"), dash/asterisk/bullet items or bare
/// lines. When any line carries a list marker, unmarked lines (preambles,
/// sign-offs) are ignored. Throws ParseError when nothing remains.
std::vector<std::string> parse_splitter_output(std::string_view raw);

enum class UnitFlag { ZeroUnits, UnitLongerThanResponse, CountAnomaly, DuplicateUnits };

struct UnitDiagnostic {
  UnitFlag flag;
  std::string message;
};

struct UnitValidationOptions {
  double max_units_per_sentence = 6.0;
};

/// Requires status preprocessed with non-empty text. On success the record is
/// status split with contiguous unit indices and any validate_units flags in
/// `diagnostics`; backend or parse failures yield status failed.
EvalRecord split_into_units(EvalRecord record, llm::ChatBackend& splitter,
                            const PromptTemplate& tmpl = default_splitter_template(),
                            const GenConfig& cfg = default_splitter_config(),
                            const UnitValidationOptions& checks = {});

/// Sanity checks on a split record; never mutates anything.
std::vector<UnitDiagnostic> validate_units(const EvalRecord& record,
                                           const UnitValidationOptions& opts = {});

}  // namespace dahl::decomposition
