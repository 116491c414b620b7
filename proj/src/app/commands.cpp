#include "dahl/app/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "dahl/core/errors.hpp"
#include "dahl/core/parallel.hpp"
#include "dahl/core/records.hpp"
#include "dahl/core/text.hpp"
#include "dahl/pipeline/decomposition.hpp"
#include "dahl/pipeline/response.hpp"
#include "dahl/pipeline/verification.hpp"
#include "dahl/stats/sampling.hpp"

namespace dahl::app {
namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

std::string describe(const std::vector<LineDiagnostic>& diags, const fs::path& path) {
  std::string msg = path.string() + ":";
  for (std::size_t i = 0; i < diags.size() && i < 5; ++i) {
    msg += " line " + std::to_string(diags[i].line) + ": " + diags[i].message + ";";
  }
  if (diags.size() > 5) msg += " (" + std::to_string(diags.size() - 5) + " more)";
  return msg;
}

std::optional<double> parse_number(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

const std::string& require_role(const std::string& id, const char* role) {
  if (id.empty()) throw ConfigError(std::string("config assigns no backend to role ") + role);
  return id;
}

void persist(const std::vector<EvalRecord>& records, const fs::path& path) {
  write_records<EvalRecord>(records, path);
}

}  // namespace

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::Generate: return "generate";
    case Stage::Preprocess: return "preprocess";
    case Stage::Split: return "split";
    case Stage::Check: return "check";
    case Stage::Score: return "score";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (auto s : {Stage::Generate, Stage::Preprocess, Stage::Split, Stage::Check, Stage::Score}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

dataset::BuildResult run_build_dataset(const RunConfig& cfg, const BuildDatasetOptions& opts,
                                       const Logger& log) {
  const auto rules = dataset::FilterRuleSet::load((opts.rules ? *opts.rules : cfg.rules_file).string());
  dataset::OverrideList overrides;
  if (opts.overrides) {
    overrides = dataset::OverrideList::load(opts.overrides->string());
  } else if (cfg.overrides_file) {
    overrides = dataset::OverrideList::load(cfg.overrides_file->string());
  }
  const auto docs = read_documents(opts.corpus);
  if (!docs.ok()) throw IoError("invalid corpus " + describe(docs.diagnostics, opts.corpus));

  const auto res = Resources::load(cfg);
  const BackendRegistry registry(cfg);
  auto generator = registry.get(require_role(cfg.question_generator, "question_generator"));
  auto categorizer = registry.get(require_role(cfg.categorizer, "categorizer"));

  dataset::BuildOptions bopts;
  bopts.question_template = res.question;
  bopts.category_template = res.category;
  bopts.questions_per_doc = cfg.questions_per_doc;
  bopts.workers = cfg.concurrency;
  say(log, "building dataset from " + std::to_string(docs.records.size()) + " documents");
  auto result = dataset::build_dataset(docs.records, *generator, *categorizer, rules, overrides,
                                       res.categories, bopts);

  write_records<Question>(result.questions, opts.out_dir / "questions.jsonl");
  write_file_atomic(opts.out_dir / "build_report.json", to_json(result.report).dump(2) + "\n");
  say(log, "kept " + std::to_string(result.report.n_kept) + " of " +
               std::to_string(result.report.n_candidates) + " candidate questions");
  return result;
}

std::vector<Question> load_questions(const fs::path& path, const CategorySet& categories) {
  auto read = read_questions(path, categories);
  if (!read.ok()) throw IoError("invalid questions file " + describe(read.diagnostics, path));
  std::set<std::string> ids;
  for (const auto& q : read.records) {
    if (!ids.insert(q.question_id).second) {
      throw IoError(path.string() + ": duplicate question_id " + q.question_id);
    }
  }
  return std::move(read.records);
}

EvaluateResult run_evaluate(const RunConfig& cfg, const Resources& res, const BackendRegistry& registry,
                            std::span<const Question> questions, const EvaluateOptions& opts,
                            const Logger& log) {
  auto generator = registry.get(opts.generator);
  auto splitter = registry.get(require_role(cfg.splitter, "splitter"));
  auto checker = registry.get(require_role(cfg.checker, "checker"));
  GenConfig gen = cfg.generation;
  if (opts.temperature) gen.temperature = *opts.temperature;
  if (auto v = validate(gen); !v.empty()) throw ConfigError("generation settings: " + v.front());

  const fs::path path = opts.out_dir / "records.jsonl";
  std::map<std::string, EvalRecord> previous;
  if (opts.resume && fs::exists(path)) {
    auto read = read_eval_records(path, res.categories);
    if (!read.ok()) throw IoError("cannot resume from " + describe(read.diagnostics, path));
    for (auto& r : read.records) {
      if (r.model_id != generator->backend_id()) {
        throw ConfigError(path.string() + " holds records of model " + r.model_id + ", not " +
                          generator->backend_id());
      }
      previous.emplace(r.question_id, std::move(r));
    }
    say(log, "resuming with " + std::to_string(previous.size()) + " stored records");
  }

  std::vector<std::optional<EvalRecord>> slots(questions.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (auto it = previous.find(questions[i].question_id); it != previous.end()) {
      slots[i] = std::move(it->second);
    } else {
      todo.push_back(i);
    }
  }
  const std::size_t workers = cfg.concurrency;
  parallel_for(todo.size(), workers, [&](std::size_t k) {
    const auto i = todo[k];
    slots[i] = response::generate_response(questions[i], *generator, gen, res.generation);
  });
  std::vector<EvalRecord> records;
  records.reserve(slots.size());
  for (auto& s : slots) records.push_back(std::move(*s));
  persist(records, path);
  say(log, "generate: " + std::to_string(todo.size()) + " new responses from " + opts.generator);

  auto run_stage = [&](Stage stage, RecordStatus input, auto&& step) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].status == input) idx.push_back(i);
    }
    parallel_for(idx.size(), workers, [&](std::size_t k) {
      records[idx[k]] = step(std::move(records[idx[k]]));
    });
    persist(records, path);
    say(log, std::string(to_string(stage)) + ": " + std::to_string(idx.size()) + " records");
    return opts.stop_after && *opts.stop_after == stage;
  };

  EvaluateResult result;
  const bool stopped =
      (opts.stop_after && *opts.stop_after == Stage::Generate) ||
      run_stage(Stage::Preprocess, RecordStatus::Pending,
                [&](EvalRecord r) { return response::preprocess(std::move(r), res.preprocess); }) ||
      run_stage(Stage::Split, RecordStatus::Preprocessed,
                [&](EvalRecord r) {
                  return decomposition::split_into_units(std::move(r), *splitter, res.splitter,
                                                         cfg.splitter_generation,
                                                         {cfg.max_units_per_sentence});
                }) ||
      run_stage(Stage::Check, RecordStatus::Split, [&](EvalRecord r) {
        return verification::check_response(std::move(r), *checker, res.checker,
                                            cfg.checker_generation, 1);
      });
  if (stopped) {
    result.records = std::move(records);
    return result;
  }

  scoring::mark_scored(records);
  persist(records, path);
  result.records = records;
  const auto report = scoring::dahl_score(records, registry.config(opts.generator).model_size);
  write_reports(report, opts.out_dir, opts.formats);
  say(log, "score: " + std::to_string(report.n_scored) + " scored of " + std::to_string(report.n_total));
  result.report = report;
  return result;
}

std::vector<ScoreReport> score_records(std::span<const EvalRecord> records,
                                       const std::map<std::string, std::string>& model_sizes) {
  std::map<std::string, std::vector<EvalRecord>> by_model;
  for (const auto& r : records) by_model[r.model_id].push_back(r);
  std::vector<ScoreReport> out;
  for (auto& [model, recs] : by_model) {
    scoring::mark_scored(recs);
    const auto it = model_sizes.find(model);
    out.push_back(scoring::dahl_score(recs, it == model_sizes.end() ? "?" : it->second));
  }
  if (out.empty()) throw scoring::NoScorableResponses();
  return out;
}

void write_reports(const ScoreReport& report, const fs::path& out_dir,
                   std::span<const scoring::ReportFormat> formats) {
  for (auto f : formats) {
    write_file_atomic(out_dir / ("report." + std::string(scoring::file_extension(f))),
                      scoring::render_report(report, f));
  }
}

std::string format_temperature(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", std::round(t * 1e9) / 1e9);
  std::string s(buf);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::vector<double> parse_temperatures(std::string_view spec) {
  spec = text::trim(spec);
  if (spec.empty()) throw UsageError("empty temperature list");
  auto num = [](std::string_view s) {
    auto v = parse_number(s);
    if (!v) throw UsageError("not a number in temperature list: '" + std::string(s) + "'");
    return *v;
  };
  std::vector<double> out;
  if (spec.find(':') != std::string_view::npos) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : spec) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    parts.push_back(cur);
    if (parts.size() != 3) throw UsageError("temperature range must be start:stop:step");
    const double start = num(parts[0]), stop = num(parts[1]), step = num(parts[2]);
    if (step <= 0.0 || stop < start) throw UsageError("temperature range needs step > 0 and stop >= start");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (n > 10'000) throw UsageError("temperature range has too many values");
    for (long i = 0; i < n; ++i) out.push_back(std::round((start + i * step) * 1e9) / 1e9);
  } else {
    std::string cur;
    for (char c : std::string(spec) + ",") {
      if (c == ',') {
        if (!text::trim(cur).empty()) out.push_back(num(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
  }
  if (out.empty()) throw UsageError("empty temperature list");
  return out;
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Resources& res,
                                      const BackendRegistry& registry,
                                      std::span<const Question> questions, const AblationOptions& opts,
                                      const Logger& log) {
  if (opts.temperatures.empty()) throw UsageError("empty temperature list");
  for (double t : opts.temperatures) {
    if (t < 0.0 || t > GenConfig::kMaxTemperature) {
      throw UsageError("temperature " + format_temperature(t) + " outside [0, 2]");
    }
    if (t > 1.0 && !opts.allow_high_temperature) {
      throw UsageError("temperature " + format_temperature(t) +
                       " above 1.0 needs --allow-high-temperature");
    }
  }
  if (!(opts.fraction > 0.0 && opts.fraction <= 1.0)) throw UsageError("fraction must be in (0, 1]");
  const auto models = opts.models.empty() ? cfg.generators : opts.models;
  if (models.empty()) throw ConfigError("no generator models configured");

  const auto sample = stats::stratified_sample(questions, opts.fraction, opts.seed);
  if (sample.empty()) throw PreconditionError("stratified sample is empty");
  write_records<Question>(sample, opts.out_dir / "sample.jsonl");
  say(log, "sample: " + std::to_string(sample.size()) + " of " + std::to_string(questions.size()) +
               " questions");

  std::vector<AblationRow> rows;
  for (const auto& model : models) {
    for (double t : opts.temperatures) {
      EvaluateOptions eo;
      eo.out_dir = opts.out_dir / model / ("t" + format_temperature(t));
      eo.generator = model;
      eo.resume = opts.resume;
      eo.temperature = t;
      AblationRow row{model, t, std::nullopt, 0};
      try {
        const auto r = run_evaluate(cfg, res, registry, sample, eo, log);
        row.dahl_score = r.report->dahl_score;
        row.n_scored = r.report->n_scored;
      } catch (const scoring::NoScorableResponses&) {
        say(log, model + " at temperature " + format_temperature(t) + ": no scorable responses");
      }
      rows.push_back(row);
    }
  }
  write_file_atomic(opts.out_dir / "ablation.csv", render_ablation_csv(rows));
  return rows;
}

std::string render_ablation_csv(std::span<const AblationRow> rows) {
  std::string out = "model,temperature,dahl_score,n_scored\n";
  char buf[64];
  for (const auto& r : rows) {
    out += r.model + "," + format_temperature(r.temperature) + ",";
    if (r.dahl_score) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.dahl_score);
      out += buf;
    }
    out += "," + std::to_string(r.n_scored) + "\n";
  }
  return out;
}

std::vector<HumanScore> read_human_scores(const fs::path& path) {
  const auto lines = text::split_lines(read_file(path));
  std::vector<HumanScore> out;
  std::size_t width = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    const auto where = path.string() + ":" + std::to_string(i + 1);
    if (fields.size() < 2) throw IoError(where + ": expected question_id,score[,score...]");
    HumanScore h{std::string(text::trim(fields[0])), {}};
    bool numeric = true;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      auto v = parse_number(fields[k]);
      if (!v) {
        numeric = false;
        break;
      }
      h.scores.push_back(*v);
    }
    if (!numeric) {
      if (out.empty() && width == 0) {
        width = fields.size();
        continue;  // header
      }
      throw IoError(where + ": non-numeric score");
    }
    if (width != 0 && fields.size() != width) throw IoError(where + ": inconsistent column count");
    width = fields.size();
    out.push_back(std::move(h));
  }
  if (out.empty()) throw IoError(path.string() + ": no human scores");
  return out;
}

ComparisonResult compare_human(std::span<const EvalRecord> records, std::span<const HumanScore> human,
                               Reduce reduce) {
  std::set<std::string> models;
  std::map<std::string, double> automated;
  for (const auto& r : records) {
    models.insert(r.model_id);
    if (scoring::is_scorable(r)) automated[r.question_id] = scoring::response_precision(r);
  }
  if (models.size() > 1) {
    throw PreconditionError("records hold several models (" +
                            join(std::vector<std::string>(models.begin(), models.end()), ", ") +
                            "); select one");
  }

  std::map<std::string, double> reference;
  for (const auto& h : human) {
    if (h.scores.size() > 1 && reduce != Reduce::Mean) {
      throw UsageError("human file has " + std::to_string(h.scores.size()) +
                       " score columns; pass --reduce mean");
    }
    double v = 0.0;
    for (double s : h.scores) v += s;
    v /= static_cast<double>(h.scores.size());
    if (!reference.emplace(h.question_id, v).second) {
      throw PreconditionError("duplicate human score for " + h.question_id);
    }
  }

  std::vector<std::string> missing_auto, missing_human;
  for (const auto& [id, v] : reference) {
    if (!automated.count(id)) missing_auto.push_back(id);
  }
  for (const auto& [id, v] : automated) {
    if (!reference.count(id)) missing_human.push_back(id);
  }
  if (!missing_auto.empty() || !missing_human.empty()) {
    std::string msg = "question ids do not align.";
    if (!missing_auto.empty()) msg += " No scorable record for: " + join(missing_auto, ", ") + ".";
    if (!missing_human.empty()) msg += " No human score for: " + join(missing_human, ", ") + ".";
    throw PreconditionError(msg);
  }

  stats::PairedScores pairs;
  for (const auto& [id, v] : automated) {
    pairs.x.push_back(v);
    pairs.y.push_back(reference.at(id));
  }
  return ComparisonResult{stats::pearson(pairs), pairs.x.size()};
}

Columns read_columns(const fs::path& path) {
  const auto contents = read_file(path);
  const auto lines = text::split_lines(contents);
  Columns out;
  const auto first = text::trim(contents);
  if (!first.empty() && first.front() == '{') {
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (text::trim(lines[i]).empty()) continue;
      try {
        const auto j = Json::parse(lines[i]);
        if (j.contains("x") && !j["x"].is_null()) out.x.push_back(j["x"].get<double>());
        if (j.contains("y") && !j["y"].is_null()) out.y.push_back(j["y"].get<double>());
      } catch (const Json::exception& e) {
        throw IoError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    return out;
  }
  bool seen_row = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto fields = split_csv_line(lines[i]);
    const auto where = path.string() + ":" + std::to_string(i + 1);
    if (fields.size() > 2) throw IoError(where + ": expected at most two columns");
    std::optional<double> x = parse_number(fields[0]);
    std::optional<double> y = fields.size() > 1 ? parse_number(fields[1]) : std::nullopt;
    const bool blank_x = text::trim(fields[0]).empty();
    const bool blank_y = fields.size() < 2 || text::trim(fields[1]).empty();
    if ((!x && !blank_x) || (!y && !blank_y)) {
      if (!seen_row) {
        seen_row = true;
        continue;  // header
      }
      throw IoError(where + ": non-numeric value");
    }
    seen_row = true;
    if (x) out.x.push_back(*x);
    if (y) out.y.push_back(*y);
  }
  return out;
}

Json to_json(const stats::TestResult& r) {
  Json j{{"statistic", r.statistic}, {"p_two_tailed", r.p_two_tailed}, {"df", r.df}};
  if (r.df2) j["df2"] = *r.df2;
  return j;
}

}  // namespace dahl::app
