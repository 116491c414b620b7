#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "dahl/core/prompt.hpp"
#include "dahl/core/types.hpp"
#include "dahl/llm/backend.hpp"

namespace dahl::verification {

PromptTemplate default_checker_template();
GenConfig default_checker_config();

/// Total, deterministic reply parser. An explicit "unknown", "uncertain" or
/// "cannot verify" wins; otherwise the earlier of a negative token
/// (false/incorrect/no) and a positive token (true/correct/yes) decides;
/// anything else is Unknown.
Verdict parse_checker_output(std::string_view raw);

struct UnitCheck {
  Verdict verdict = Verdict::Unknown;
  std::string reply;
};

/// One backend call for one unit. Propagates BackendError.
UnitCheck check_unit(const AtomicUnit& unit, llm::ChatBackend& checker,
                     const PromptTemplate& tmpl = default_checker_template(),
                     const GenConfig& cfg = default_checker_config());

/// Requires status split. Checks every unit (up to `workers` at once) and
/// assigns verdicts in unit order. Outcome: checked; excluded_unknown when any
/// verdict is Unknown; excluded_mismatch when some (not all) calls failed;
/// failed when every call failed.
EvalRecord check_response(EvalRecord record, llm::ChatBackend& checker,
                          const PromptTemplate& tmpl = default_checker_template(),
                          const GenConfig& cfg = default_checker_config(),
                          std::size_t workers = 1);

}  // namespace dahl::verification
