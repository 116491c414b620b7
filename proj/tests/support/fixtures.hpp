#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dahl/app/config.hpp"
#include "dahl/core/records.hpp"
#include "dahl/core/types.hpp"

namespace fixture {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "dahl") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) { return dahl::read_file(p); }

inline const std::vector<std::string>& labels29() {
  static const std::vector<std::string> kLabels{
      "Anaesthesia", "Anatomy",     "Bio-Statistics", "Biochemistry", "Cardiology",     "Community Medicine",
      "Dental",      "Dermatology", "ENT",            "Forensic Medicine", "Genetics",    "Immunology",
      "Medicine",    "Microbiology", "Neurology",     "O&G",          "Oncology",       "Ophthalmology",
      "Orthopaedics", "PSM",        "Pathology",      "Pediatrics",   "Pharmacology",   "Physiology",
      "Psychiatry",  "Public Health", "Radiology",    "Surgery",      "Other"};
  return kLabels;
}

/// A finished record in a random terminal or scorable status, valid under
/// validate_record.
inline dahl::EvalRecord random_record(std::mt19937_64& rng, std::size_t i, const std::string& model = "m") {
  using namespace dahl;
  const auto& labels = labels29();
  EvalRecord r;
  r.question_id = "q" + std::to_string(i);
  r.model_id = model;
  r.category = CategoryLabel{labels[rng() % labels.size()]};
  r.gen_config = GenConfig{0.6, 256, std::nullopt};
  r.prompt = "Question " + std::to_string(i) + "?";
  r.raw_response = "Raw response " + std::to_string(i) + ". " + std::string(rng() % 40, 'x');
  r.finish_reason = FinishReason::Stop;

  const auto pick = rng() % 100;
  auto add_units = [&](std::size_t n, bool allow_unknown, bool verdicts) {
    for (std::size_t k = 0; k < n; ++k) {
      AtomicUnit u{k, "Unit " + std::to_string(k) + " of " + std::to_string(i) + ".", std::nullopt, std::nullopt};
      if (verdicts) {
        const auto v = rng() % (allow_unknown ? 3 : 2);
        u.verdict = v == 0 ? Verdict::True : v == 1 ? Verdict::False : Verdict::Unknown;
        u.checker_reply = std::string(to_string(*u.verdict));
      }
      r.units.push_back(std::move(u));
    }
  };
  if (pick < 70) {
    r.preprocessed = "Clean response " + std::to_string(i) + ". " + std::string(rng() % 60, 'y');
    add_units(1 + rng() % 12, false, true);
    r.status = rng() % 2 ? RecordStatus::Checked : RecordStatus::Scored;
  } else if (pick < 78) {
    r.preprocessed = "I don't know.";
    r.status = RecordStatus::ExcludedNoncommittal;
  } else if (pick < 86) {
    r.preprocessed = "Uncertain response " + std::to_string(i) + ".";
    add_units(2 + rng() % 6, false, true);
    r.units[rng() % r.units.size()].verdict = Verdict::Unknown;
    r.status = RecordStatus::ExcludedUnknown;
  } else if (pick < 93) {
    r.preprocessed = "Partly checked response " + std::to_string(i) + ".";
    add_units(2 + rng() % 6, false, true);
    r.units.back().verdict.reset();
    r.units.back().checker_reply.reset();
    r.status = RecordStatus::ExcludedMismatch;
  } else {
    r.status = RecordStatus::Failed;
    r.error = "generation failed: scripted";
  }
  return r;
}

inline dahl::app::BackendConfig mock_backend(const std::string& id, std::vector<dahl::llm::MockRule> rules,
                                             std::optional<std::string> fallback = std::nullopt,
                                             const std::string& size = "?") {
  dahl::app::BackendConfig b;
  b.kind = dahl::app::BackendConfig::Kind::Mock;
  b.spec.backend_id = id;
  b.spec.model = "mock";
  b.mock_rules = std::move(rules);
  b.mock_default = std::move(fallback);
  b.model_size = size;
  return b;
}

inline dahl::llm::MockRule rule_contains(std::string needle, std::vector<std::string> replies) {
  dahl::llm::MockRule r;
  r.contains = std::move(needle);
  r.replies = std::move(replies);
  return r;
}

inline dahl::llm::MockRule rule_regex(std::string re, std::vector<std::string> replies) {
  dahl::llm::MockRule r;
  r.regex = std::move(re);
  r.replies = std::move(replies);
  return r;
}

/// Questions "Question k on <Category>?" with the given per-category sizes.
inline std::vector<dahl::Question> category_questions(const std::vector<std::size_t>& sizes) {
  std::vector<dahl::Question> out;
  const auto& labels = labels29();
  std::size_t k = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    for (std::size_t j = 0; j < sizes[c]; ++j, ++k) {
      dahl::Question q;
      q.question_id = "c" + std::to_string(c) + "-q" + std::to_string(j);
      q.text = "Question " + std::to_string(k) + " on " + labels[c % labels.size()] + "?";
      q.category = dahl::CategoryLabel{labels[c % labels.size()]};
      q.source_doc_id = "doc" + std::to_string(c);
      out.push_back(std::move(q));
    }
  }
  return out;
}

/// Mock roles whose per-response precision is (2L + v) / 9 where L = category
/// index mod 5 and v in {0, 1} is picked by the mock's prompt hash.
inline dahl::app::RunConfig category_level_config(const fs::path& cache_dir) {
  using dahl::llm::MockRule;
  auto cfg = dahl::app::default_config();
  const auto& labels = labels29();
  std::vector<MockRule> gen_rules, split_rules;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const auto level = std::to_string(c % 5);
    gen_rules.push_back(rule_contains(" on " + labels[c] + "?",
                                      {"Level " + level + " variant 0.", "Level " + level + " variant 1."}));
  }
  for (int level = 0; level < 5; ++level) {
    for (int v = 0; v < 2; ++v) {
      const int n_true = 2 * level + v;
      std::string units;
      for (int u = 0; u < 9; ++u) {
        units += std::to_string(u + 1) + ". Claim " + std::to_string(u) + (u < n_true ? " [true]" : " [false]") +
                 ".\n";
      }
      split_rules.push_back(rule_contains("Level " + std::to_string(level) + " variant " + std::to_string(v), {units}));
    }
  }
  cfg.backends["gen-a"] = mock_backend("gen-a", gen_rules, std::nullopt, "7B");
  cfg.backends["splitter"] = mock_backend("splitter", split_rules);
  cfg.backends["checker"] =
      mock_backend("checker", {rule_contains("[true]", {"True"}), rule_contains("[false]", {"False"})});
  cfg.generators = {"gen-a"};
  cfg.splitter = "splitter";
  cfg.checker = "checker";
  cfg.cache_dir = cache_dir;
  cfg.concurrency = 2;
  return cfg;
}

}  // namespace fixture
