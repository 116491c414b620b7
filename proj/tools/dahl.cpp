// dahl: question set construction, hallucination evaluation and statistics.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>

#include "dahl/app/commands.hpp"
#include "dahl/core/errors.hpp"
#include "dahl/core/records.hpp"
#include "dahl/scoring/scoring.hpp"
#include "dahl/stats/sampling.hpp"
#include "dahl/stats/tests.hpp"

namespace fs = std::filesystem;
using namespace dahl;
using namespace dahl::app;

namespace {

struct Globals {
  std::optional<fs::path> config;
  std::optional<fs::path> cache_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> concurrency;
  bool resume = false;
  bool no_cache = false;
  bool quiet = false;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config ? load_config(*g.config) : default_config();
  if (!g.config) check_config(cfg);
  if (g.cache_dir) cfg.cache_dir = *g.cache_dir;
  if (g.no_cache) cfg.cache_enabled = false;
  if (g.seed) cfg.seed = *g.seed;
  if (g.concurrency) cfg.concurrency = *g.concurrency;
  if (cfg.concurrency < 1) throw UsageError("--concurrency must be >= 1");
  return cfg;
}

Logger make_logger(const Globals& g) {
  if (g.quiet) return {};
  return [](std::string_view msg) { std::cerr << msg << '\n'; };
}

std::vector<scoring::ReportFormat> parse_formats(const std::vector<std::string>& names) {
  std::vector<scoring::ReportFormat> out;
  for (const auto& n : names) {
    if (n == "all") {
      return {scoring::ReportFormat::Json, scoring::ReportFormat::Csv, scoring::ReportFormat::Markdown};
    }
    auto f = scoring::parse_report_format(n);
    if (!f) throw UsageError("unknown report format '" + n + "'");
    out.push_back(*f);
  }
  return out;
}

std::map<std::string, std::string> model_sizes(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& [id, b] : cfg.backends) out[id] = b.model_size;
  return out;
}

std::vector<EvalRecord> load_records(const fs::path& path, const CategorySet& categories) {
  auto read = read_eval_records(path, categories);
  if (!read.ok()) {
    const auto& d = read.diagnostics.front();
    throw IoError(path.string() + ":" + std::to_string(d.line) + ": " + d.message);
  }
  return std::move(read.records);
}

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fact-conflicting hallucination evaluation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
  app.add_option("--seed", g.seed, "Seed for sampling");
  app.add_option("--concurrency", g.concurrency, "Records processed at once");
  app.add_flag("--resume", g.resume, "Continue from existing outputs");
  app.add_flag("--no-cache", g.no_cache, "Bypass the response cache");
  app.add_flag("-q,--quiet", g.quiet, "No progress output");

  // build-dataset
  auto* build = app.add_subcommand("build-dataset", "Generate, filter and categorize questions");
  BuildDatasetOptions bopts;
  build->add_option("--corpus", bopts.corpus, "JSONL of source documents")->required();
  build->add_option("--out", bopts.out_dir, "Output directory")->required();
  std::optional<fs::path> rules_path, overrides_path;
  build->add_option("--rules", rules_path, "JSONL filter rules");
  build->add_option("--overrides", overrides_path, "JSON force_keep/force_drop lists");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Run the evaluation pipeline");
  fs::path questions_path, out_dir;
  std::vector<std::string> models;
  std::vector<std::string> formats{"all"};
  std::string stop_after;
  std::optional<double> temperature;
  eval->add_option("--questions", questions_path, "questions.jsonl")->required()->check(CLI::ExistingFile);
  eval->add_option("--out-dir", out_dir, "Output directory")->required();
  eval->add_option("--model", models, "Generator backend id(s); default: roles.generators");
  eval->add_option("--format", formats, "json, csv, markdown or all");
  eval->add_option("--temperature", temperature, "Override the generation temperature");
  eval->add_option("--stop-after", stop_after)->group("");

  // score
  auto* score = app.add_subcommand("score", "Score a finished records file");
  fs::path records_path;
  score->add_option("--records", records_path, "records.jsonl")->required()->check(CLI::ExistingFile);
  score->add_option("--out-dir", out_dir, "Output directory")->required();
  score->add_option("--format", formats, "json, csv, markdown or all");

  // ablate-temperature
  auto* ablate = app.add_subcommand("ablate-temperature", "Evaluate one sample across temperatures");
  AblationOptions aopts;
  std::string temps = "0.1:1.0:0.1";
  ablate->add_option("--questions", questions_path, "questions.jsonl")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out-dir", out_dir, "Output directory")->required();
  ablate->add_option("--temps", temps, "List (0.1,0.5) or range (start:stop:step)")->capture_default_str();
  ablate->add_option("--fraction", aopts.fraction, "Stratified sample fraction")->capture_default_str();
  ablate->add_option("--model", models, "Generator backend id(s)");
  ablate->add_flag("--allow-high-temperature", aopts.allow_high_temperature, "Permit temperatures above 1.0");

  // compare-human
  auto* human = app.add_subcommand("compare-human", "Correlate automated and human precision");
  fs::path human_path;
  std::string reduce = "none";
  std::string model;
  human->add_option("--human", human_path, "CSV question_id,score[,score2]")->required()->check(CLI::ExistingFile);
  human->add_option("--records", records_path, "records.jsonl")->required()->check(CLI::ExistingFile);
  human->add_option("--model", model, "Model id when the records hold several");
  human->add_option("--reduce", reduce, "none or mean")->check(CLI::IsMember({"none", "mean"}));

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Statistical tests on CSV/JSONL columns");
  stats_cmd->require_subcommand(1);
  fs::path input;
  std::string variant = "student";
  double alpha = 0.05;
  auto* st_pearson = stats_cmd->add_subcommand("pearson", "Pearson correlation of x and y");
  auto* st_ttest = stats_cmd->add_subcommand("ttest", "Two-sample t-test of x and y");
  auto* st_ftest = stats_cmd->add_subcommand("ftest", "F-test for equal variances");
  auto* st_units = stats_cmd->add_subcommand("unitcount", "Compare two unit-count vectors");
  for (auto* s : {st_pearson, st_ttest, st_ftest, st_units}) {
    s->add_option("--input", input, "CSV (x,y) or JSONL ({\"x\":..,\"y\":..})")->required()->check(CLI::ExistingFile);
  }
  st_ttest->add_option("--variant", variant, "student or welch")->check(CLI::IsMember({"student", "welch"}));
  st_units->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  auto* st_sample = stats_cmd->add_subcommand("sample", "Stratified sample summary");
  double fraction = 0.1;
  st_sample->add_option("--questions", questions_path, "questions.jsonl")->required()->check(CLI::ExistingFile);
  st_sample->add_option("--fraction", fraction, "Sample fraction")->capture_default_str();

  // sample
  auto* sample = app.add_subcommand("sample", "Write a stratified sample of a questions file");
  fs::path sample_out;
  sample->add_option("--questions", questions_path, "questions.jsonl")->required()->check(CLI::ExistingFile);
  sample->add_option("--fraction", fraction, "Sample fraction")->capture_default_str();
  sample->add_option("--out", sample_out, "Output questions.jsonl")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const auto log = make_logger(g);
    auto cfg = resolve_config(g);

    if (build->parsed()) {
      bopts.rules = rules_path;
      bopts.overrides = overrides_path;
      run_build_dataset(cfg, bopts, log);
      return 0;
    }

    if (eval->parsed()) {
      const auto res = Resources::load(cfg);
      const BackendRegistry registry(cfg);
      const auto questions = load_questions(questions_path, res.categories);
      EvaluateOptions eo;
      eo.resume = g.resume;
      eo.temperature = temperature;
      eo.formats = parse_formats(formats);
      if (!stop_after.empty()) {
        eo.stop_after = parse_stage(stop_after);
        if (!eo.stop_after) throw UsageError("unknown stage '" + stop_after + "'");
      }
      const auto gens = models.empty() ? cfg.generators : models;
      if (gens.empty()) throw ConfigError("no generator backend configured");
      std::vector<ScoreReport> reports;
      for (const auto& m : gens) {
        eo.generator = m;
        eo.out_dir = out_dir / m;
        auto r = run_evaluate(cfg, res, registry, questions, eo, log);
        if (r.report) reports.push_back(*r.report);
      }
      if (!reports.empty()) {
        write_file_atomic(out_dir / "summary.md", scoring::render_markdown_table(reports));
        std::cout << scoring::render_markdown_table(reports);
      }
      return 0;
    }

    if (score->parsed()) {
      const auto res = Resources::load(cfg);
      const auto records = load_records(records_path, res.categories);
      const auto reports = score_records(records, model_sizes(cfg));
      const auto fmts = parse_formats(formats);
      for (const auto& r : reports) {
        write_reports(r, reports.size() == 1 ? out_dir : out_dir / r.model_id, fmts);
      }
      std::cout << scoring::render_markdown_table(reports);
      return 0;
    }

    if (ablate->parsed()) {
      const auto res = Resources::load(cfg);
      const BackendRegistry registry(cfg);
      const auto questions = load_questions(questions_path, res.categories);
      aopts.temperatures = parse_temperatures(temps);
      aopts.seed = cfg.seed;
      aopts.out_dir = out_dir;
      aopts.models = models;
      aopts.resume = g.resume;
      const auto rows = run_ablation(cfg, res, registry, questions, aopts, log);
      std::cout << render_ablation_csv(rows);
      return 0;
    }

    if (human->parsed()) {
      const auto res = Resources::load(cfg);
      auto records = load_records(records_path, res.categories);
      if (!model.empty()) {
        std::erase_if(records, [&](const EvalRecord& r) { return r.model_id != model; });
        if (records.empty()) throw PreconditionError("no records for model " + model);
      }
      const auto scores = read_human_scores(human_path);
      const auto c = compare_human(records, scores, reduce == "mean" ? Reduce::Mean : Reduce::None);
      print_json({{"n", c.n}, {"r", c.test.statistic}, {"p_two_tailed", c.test.p_two_tailed},
                  {"df", c.test.df}});
      return 0;
    }

    if (stats_cmd->parsed()) {
      if (st_sample->parsed()) {
        const auto res = Resources::load(cfg);
        const auto questions = load_questions(questions_path, res.categories);
        const auto picked = stats::stratified_sample(questions, fraction, cfg.seed);
        Json per_category = Json::object();
        Json ids = Json::array();
        for (const auto& q : picked) {
          per_category[q.category.name] = per_category.value(q.category.name, 0) + 1;
          ids.push_back(q.question_id);
        }
        print_json({{"n_total", questions.size()}, {"n_sampled", picked.size()}, {"seed", cfg.seed},
                    {"per_category", per_category}, {"question_ids", ids}});
        return 0;
      }
      const auto cols = read_columns(input);
      if (st_pearson->parsed()) {
        auto j = to_json(stats::pearson({cols.x, cols.y}));
        j["n"] = cols.x.size();
        print_json(j);
      } else if (st_ttest->parsed()) {
        print_json(to_json(stats::t_test(cols.x, cols.y, *stats::parse_t_test_variant(variant))));
      } else if (st_ftest->parsed()) {
        print_json(to_json(stats::f_test_equal_variance(cols.x, cols.y)));
      } else if (st_units->parsed()) {
        std::vector<int> a, b;
        for (double v : cols.x) a.push_back(static_cast<int>(std::lround(v)));
        for (double v : cols.y) b.push_back(static_cast<int>(std::lround(v)));
        const auto c = stats::unit_count_compare(a, b, alpha);
        auto j = to_json(c.test);
        j["alpha"] = c.alpha;
        j["significant"] = c.significant;
        j["decision"] = c.significant ? "significant difference" : "no significant difference";
        print_json(j);
      }
      return 0;
    }

    if (sample->parsed()) {
      const auto res = Resources::load(cfg);
      const auto questions = load_questions(questions_path, res.categories);
      const auto picked = stats::stratified_sample(questions, fraction, cfg.seed);
      write_records<Question>(picked, sample_out);
      if (log) log("sampled " + std::to_string(picked.size()) + " of " + std::to_string(questions.size()));
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
