#include "dahl/app/config.hpp"

#include <cctype>

#include "dahl/core/errors.hpp"
#include "dahl/core/text.hpp"
#include "dahl/dataset/builder.hpp"
#include "dahl/pipeline/decomposition.hpp"
#include "dahl/pipeline/verification.hpp"

#ifndef DAHL_RESOURCE_DIR
#define DAHL_RESOURCE_DIR "resources"
#endif

namespace dahl::app {
namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string default_auth_env(const std::string& backend_id) {
  std::string env;
  for (char c : backend_id) {
    env.push_back(std::isalnum(static_cast<unsigned char>(c))
                      ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                      : '_');
  }
  return env + "_API_KEY";
}

GenConfig gen_from_json(const Json& j, GenConfig base) {
  base.temperature = j.value("temperature", base.temperature);
  base.max_tokens = j.value("max_tokens", base.max_tokens);
  if (j.contains("seed") && !j["seed"].is_null()) base.seed = j["seed"].get<std::int64_t>();
  return base;
}

llm::MockRule mock_rule_from_json(const Json& j) {
  llm::MockRule r;
  if (j.contains("contains")) r.contains = j["contains"].get<std::string>();
  if (j.contains("regex")) r.regex = j["regex"].get<std::string>();
  if (j.contains("reply")) r.replies.push_back(j["reply"].get<std::string>());
  if (j.contains("replies")) {
    for (const auto& s : j["replies"]) r.replies.push_back(s.get<std::string>());
  }
  if (j.contains("finish_reason")) {
    const auto f = parse_finish_reason(j["finish_reason"].get<std::string>());
    if (!f) throw ConfigError("mock rule has an invalid finish_reason");
    r.finish_reason = *f;
  }
  return r;
}

BackendConfig backend_from_json(const std::string& id, const Json& j) {
  BackendConfig b;
  b.spec.backend_id = id;
  const auto type = j.value("type", std::string("http"));
  b.model_size = j.value("size", std::string("?"));
  b.spec.max_concurrency = j.value("max_concurrency", b.spec.max_concurrency);
  b.spec.requests_per_second = j.value("requests_per_second", b.spec.requests_per_second);
  if (type == "mock") {
    b.kind = BackendConfig::Kind::Mock;
    b.spec.model = j.value("model", std::string("mock"));
    const Json rules = j.value("rules", Json::array());
    for (const auto& r : rules) b.mock_rules.push_back(mock_rule_from_json(r));
    if (j.value("echo", false)) b.mock_default = "{prompt}";
    if (j.contains("default")) b.mock_default = j["default"].get<std::string>();
    return b;
  }
  if (type != "http") throw ConfigError("backend " + id + ": unknown type '" + type + "'");
  b.kind = BackendConfig::Kind::Http;
  b.spec.endpoint = j.at("endpoint").get<std::string>();
  b.spec.model = j.at("model").get<std::string>();
  b.spec.auth_env = j.value("auth_env", default_auth_env(id));
  if (j.contains("auth") || j.contains("api_key")) {
    throw ConfigError("backend " + id + ": credentials belong in the environment, not the config file");
  }
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    b.spec.retry.max_attempts = r.value("max_attempts", b.spec.retry.max_attempts);
    b.spec.retry.base_backoff =
        std::chrono::milliseconds(r.value("base_backoff_ms", b.spec.retry.base_backoff.count()));
    b.spec.retry.max_backoff =
        std::chrono::milliseconds(r.value("max_backoff_ms", b.spec.retry.max_backoff.count()));
  }
  b.spec.timeout = std::chrono::seconds(j.value("timeout_s", b.spec.timeout.count()));
  return b;
}

PromptTemplate load_or(const std::optional<fs::path>& path, PromptTemplate fallback) {
  return path ? PromptTemplate::load(path->string()) : std::move(fallback);
}

}  // namespace

fs::path default_resource_dir() { return fs::path(DAHL_RESOURCE_DIR); }

RunConfig default_config() {
  RunConfig cfg;
  const auto dir = default_resource_dir();
  cfg.categories_file = dir / "categories.txt";
  cfg.rules_file = dir / "filter_rules.jsonl";
  cfg.noncommittal_file = dir / "noncommittal_phrases.txt";
  cfg.abbreviations_file = dir / "abbreviations.txt";
  return cfg;
}

RunConfig config_from_json(const Json& j, const fs::path& base) {
  RunConfig cfg = default_config();
  try {
    const Json backends = j.value("backends", Json::object());
    for (const auto& [id, spec] : backends.items()) {
      cfg.backends[id] = backend_from_json(id, spec);
    }
    if (j.contains("roles")) {
      const auto& roles = j["roles"];
      if (roles.contains("generators")) {
        const auto& g = roles["generators"];
        cfg.generators = g.is_array() ? g.get<std::vector<std::string>>()
                                      : std::vector<std::string>{g.get<std::string>()};
      }
      cfg.splitter = roles.value("splitter", std::string{});
      cfg.checker = roles.value("checker", std::string{});
      cfg.question_generator = roles.value("question_generator", std::string{});
      cfg.categorizer = roles.value("categorizer", std::string{});
    }
    if (j.contains("generation")) cfg.generation = gen_from_json(j["generation"], cfg.generation);
    if (j.contains("splitter_generation")) {
      cfg.splitter_generation = gen_from_json(j["splitter_generation"], cfg.splitter_generation);
    }
    if (j.contains("checker_generation")) {
      cfg.checker_generation = gen_from_json(j["checker_generation"], cfg.checker_generation);
    }
    if (j.contains("prompts")) {
      const auto& p = j["prompts"];
      auto opt = [&](const char* key) -> std::optional<fs::path> {
        if (!p.contains(key)) return std::nullopt;
        return resolve(base, p[key].get<std::string>());
      };
      cfg.prompts.generation = opt("generation");
      cfg.prompts.splitter = opt("splitter");
      cfg.prompts.checker = opt("checker");
      cfg.prompts.question = opt("question");
      cfg.prompts.category = opt("category");
    }
    if (j.contains("cache_dir")) cfg.cache_dir = resolve(base, j["cache_dir"].get<std::string>());
    cfg.cache_enabled = j.value("cache", cfg.cache_enabled);
    if (j.contains("categories")) cfg.categories_file = resolve(base, j["categories"].get<std::string>());
    if (j.contains("rules")) cfg.rules_file = resolve(base, j["rules"].get<std::string>());
    if (j.contains("overrides")) cfg.overrides_file = resolve(base, j["overrides"].get<std::string>());
    if (j.contains("noncommittal_phrases")) {
      cfg.noncommittal_file = resolve(base, j["noncommittal_phrases"].get<std::string>());
    }
    if (j.contains("abbreviations")) {
      cfg.abbreviations_file = resolve(base, j["abbreviations"].get<std::string>());
    }
    if (j.contains("key_normalization")) {
      const auto& k = j["key_normalization"];
      cfg.key_normalization.case_fold = k.value("case_fold", true);
      cfg.key_normalization.collapse_whitespace = k.value("collapse_whitespace", true);
      cfg.key_normalization.strip_terminal_punctuation = k.value("strip_terminal_punctuation", true);
    }
    cfg.concurrency = j.value("concurrency", cfg.concurrency);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.questions_per_doc = j.value("questions_per_doc", cfg.questions_per_doc);
    cfg.max_units_per_sentence = j.value("max_units_per_sentence", cfg.max_units_per_sentence);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (cfg.generators.empty()) {
    for (const auto& [id, b] : cfg.backends) {
      (void)b;
      if (id != cfg.splitter && id != cfg.checker) {
        cfg.generators.push_back(id);
        break;
      }
    }
  }
  check_config(cfg);
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

void check_config(const RunConfig& cfg) {
  auto need_file = [](const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  need_file(cfg.categories_file, "category file");
  need_file(cfg.rules_file, "rules file");
  need_file(cfg.noncommittal_file, "noncommittal phrase file");
  need_file(cfg.abbreviations_file, "abbreviation file");
  if (cfg.overrides_file) need_file(*cfg.overrides_file, "overrides file");
  for (const auto& p : {cfg.prompts.generation, cfg.prompts.splitter, cfg.prompts.checker,
                        cfg.prompts.question, cfg.prompts.category}) {
    if (p) need_file(*p, "prompt template");
  }
  auto need_backend = [&](const std::string& id, const char* role) {
    if (!id.empty() && !cfg.backends.count(id)) {
      throw ConfigError(std::string("role ") + role + " refers to unknown backend '" + id + "'");
    }
  };
  for (const auto& g : cfg.generators) need_backend(g, "generators");
  need_backend(cfg.splitter, "splitter");
  need_backend(cfg.checker, "checker");
  need_backend(cfg.question_generator, "question_generator");
  need_backend(cfg.categorizer, "categorizer");
  for (const auto* g : {&cfg.generation, &cfg.splitter_generation, &cfg.checker_generation}) {
    if (auto v = validate(*g); !v.empty()) throw ConfigError("generation settings: " + v.front());
  }
  for (const auto& [id, b] : cfg.backends) {
    if (auto v = llm::validate(b.spec); !v.empty()) throw ConfigError("backend " + id + ": " + v.front());
  }
  if (cfg.concurrency < 1) throw ConfigError("concurrency must be >= 1");
}

BackendRegistry::BackendRegistry(const RunConfig& cfg) : configs_(cfg.backends) {
  for (const auto& [id, b] : cfg.backends) {
    llm::BackendPtr base;
    if (b.kind == BackendConfig::Kind::Mock) {
      base = std::make_shared<llm::MockBackend>(id, b.mock_rules, b.mock_default, b.spec.model);
    } else {
      base = std::make_shared<llm::HttpChatBackend>(b.spec, llm::make_http_transport());
    }
    llm::BackendPtr throttled = std::make_shared<llm::ThrottledBackend>(
        std::move(base), b.spec.max_concurrency, b.spec.requests_per_second);
    backends_[id] = cfg.cache_enabled
                        ? std::make_shared<llm::CachedBackend>(std::move(throttled), cfg.cache_dir / id)
                        : std::move(throttled);
  }
}

llm::BackendPtr BackendRegistry::get(const std::string& backend_id) const {
  auto it = backends_.find(backend_id);
  if (it == backends_.end()) throw ConfigError("no backend configured with id '" + backend_id + "'");
  return it->second;
}

const BackendConfig& BackendRegistry::config(const std::string& backend_id) const {
  auto it = configs_.find(backend_id);
  if (it == configs_.end()) throw ConfigError("no backend configured with id '" + backend_id + "'");
  return it->second;
}

Resources Resources::load(const RunConfig& cfg) {
  response::PreprocessOptions pre;
  pre.abbreviations.clear();
  for (auto& a : text::read_list_file(cfg.abbreviations_file.string())) {
    pre.abbreviations.push_back(text::to_lower(a));
  }
  pre.noncommittal_phrases = text::read_list_file(cfg.noncommittal_file.string());
  pre.key_normalization = cfg.key_normalization;
  return Resources{
      CategorySet::load(cfg.categories_file.string()),
      load_or(cfg.prompts.generation, response::default_generation_template()),
      load_or(cfg.prompts.splitter, decomposition::default_splitter_template()),
      load_or(cfg.prompts.checker, verification::default_checker_template()),
      load_or(cfg.prompts.question, dataset::default_question_template()),
      load_or(cfg.prompts.category, dataset::default_category_template()),
      std::move(pre),
  };
}

}  // namespace dahl::app
