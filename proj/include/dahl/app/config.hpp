#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dahl/core/categories.hpp"
#include "dahl/core/prompt.hpp"
#include "dahl/core/records.hpp"
#include "dahl/core/types.hpp"
#include "dahl/llm/backend.hpp"
#include "dahl/pipeline/response.hpp"

namespace dahl::app {

namespace fs = std::filesystem;

/// Directory holding the shipped category list, rules, phrase lists and prompts.
fs::path default_resource_dir();

struct BackendConfig {
  enum class Kind { Http, Mock };

  Kind kind = Kind::Http;
  llm::BackendSpec spec;
  std::vector<llm::MockRule> mock_rules;
  std::optional<std::string> mock_default;
  std::string model_size = "?";
};

struct PromptPaths {
  std::optional<fs::path> generation;
  std::optional<fs::path> splitter;
  std::optional<fs::path> checker;
  std::optional<fs::path> question;
  std::optional<fs::path> category;
};

/// Everything a run needs. Paths are absolute after loading.
struct RunConfig {
  std::map<std::string, BackendConfig> backends;
  std::vector<std::string> generators;
  std::string splitter;
  std::string checker;
  std::string question_generator;
  std::string categorizer;

  GenConfig generation{0.6, 256, std::nullopt};
  GenConfig splitter_generation{0.0, 1024, std::nullopt};
  GenConfig checker_generation{0.0, 64, std::nullopt};

  PromptPaths prompts;
  fs::path cache_dir = ".dahl-cache";
  bool cache_enabled = true;

  fs::path categories_file;
  fs::path rules_file;
  std::optional<fs::path> overrides_file;
  fs::path noncommittal_file;
  fs::path abbreviations_file;
  response::KeyNormalization key_normalization;

  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
  int questions_per_doc = 5;
  double max_units_per_sentence = 6.0;
};

/// Config with shipped resources and no backends.
RunConfig default_config();

RunConfig config_from_json(const Json& j, const fs::path& base_dir);

/// Loads a JSON config. Relative paths resolve against the config file's
/// directory; every referenced file must exist. Throws ConfigError.
RunConfig load_config(const fs::path& path);

/// Throws ConfigError on dangling role references, missing files or invalid
/// generation settings.
void check_config(const RunConfig& cfg);

/// Builds the role backends once: mock or HTTP, throttled, and wrapped in the
/// response cache when enabled.
class BackendRegistry {
 public:
  explicit BackendRegistry(const RunConfig& cfg);

  llm::BackendPtr get(const std::string& backend_id) const;
  const BackendConfig& config(const std::string& backend_id) const;

 private:
  std::map<std::string, llm::BackendPtr> backends_;
  std::map<std::string, BackendConfig> configs_;
};

/// Prompt templates and text resources resolved from a config.
struct Resources {
  CategorySet categories;
  PromptTemplate generation;
  PromptTemplate splitter;
  PromptTemplate checker;
  PromptTemplate question;
  PromptTemplate category;
  response::PreprocessOptions preprocess;

  static Resources load(const RunConfig& cfg);
};

}  // namespace dahl::app
