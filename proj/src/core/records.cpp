#include "dahl/core/records.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "dahl/core/errors.hpp"
#include "dahl/core/text.hpp"

namespace dahl {
namespace fs = std::filesystem;

namespace {

template <typename E, typename Parse>
E enum_field(const Json& j, const char* key, Parse parse) {
  const auto s = j.at(key).get<std::string>();
  const auto v = parse(s);
  if (!v) throw Error(std::string("invalid value for '") + key + "': " + s);
  return *v;
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<T>();
  return std::nullopt;
}

}  // namespace

void to_json(Json& j, const GenConfig& g) {
  j = Json{{"temperature", g.temperature}, {"max_tokens", g.max_tokens}};
  if (g.seed) j["seed"] = *g.seed;
}

void from_json(const Json& j, GenConfig& g) {
  g.temperature = j.at("temperature").get<double>();
  g.max_tokens = j.at("max_tokens").get<int>();
  g.seed = optional_field<std::int64_t>(j, "seed");
}

void to_json(Json& j, const SourceDocument& d) {
  j = Json{{"doc_id", d.doc_id}, {"title", d.title}, {"body", d.body}};
}

void from_json(const Json& j, SourceDocument& d) {
  d.doc_id = j.at("doc_id").get<std::string>();
  d.title = j.value("title", std::string{});
  d.body = j.at("body").get<std::string>();
}

void to_json(Json& j, const Question& q) {
  j = Json{{"question_id", q.question_id},
           {"text", q.text},
           {"category", q.category.name},
           {"source_doc_id", q.source_doc_id},
           {"filter_trace", q.filter_trace},
           {"review_override", std::string(to_string(q.review_override))}};
}

void from_json(const Json& j, Question& q) {
  q.question_id = j.at("question_id").get<std::string>();
  q.text = j.at("text").get<std::string>();
  q.category = CategoryLabel{j.at("category").get<std::string>()};
  q.source_doc_id = j.value("source_doc_id", std::string{});
  q.filter_trace = j.value("filter_trace", std::vector<std::string>{});
  q.review_override = j.contains("review_override")
                          ? enum_field<ReviewOverride>(j, "review_override", parse_review_override)
                          : ReviewOverride::None;
}

void to_json(Json& j, const AtomicUnit& u) {
  j = Json{{"index", u.index}, {"text", u.text}};
  if (u.verdict) j["verdict"] = std::string(to_string(*u.verdict));
  if (u.checker_reply) j["checker_reply"] = *u.checker_reply;
}

void from_json(const Json& j, AtomicUnit& u) {
  u.index = j.at("index").get<std::size_t>();
  u.text = j.at("text").get<std::string>();
  u.verdict = j.contains("verdict")
                  ? std::optional(enum_field<Verdict>(j, "verdict", parse_verdict))
                  : std::nullopt;
  u.checker_reply = optional_field<std::string>(j, "checker_reply");
}

void to_json(Json& j, const EvalRecord& r) {
  j = Json{{"question_id", r.question_id},
           {"model_id", r.model_id},
           {"category", r.category.name},
           {"gen_config", r.gen_config},
           {"prompt", r.prompt},
           {"raw_response", r.raw_response},
           {"units", r.units},
           {"diagnostics", r.diagnostics},
           {"status", std::string(to_string(r.status))}};
  if (r.finish_reason) j["finish_reason"] = std::string(to_string(*r.finish_reason));
  if (r.preprocessed) j["preprocessed"] = *r.preprocessed;
  if (r.error) j["error"] = *r.error;
}

void from_json(const Json& j, EvalRecord& r) {
  r.question_id = j.at("question_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.category = CategoryLabel{j.value("category", std::string{})};
  r.gen_config = j.at("gen_config").get<GenConfig>();
  r.prompt = j.value("prompt", std::string{});
  r.raw_response = j.at("raw_response").get<std::string>();
  r.finish_reason = j.contains("finish_reason")
                        ? std::optional(enum_field<FinishReason>(j, "finish_reason",
                                                                 parse_finish_reason))
                        : std::nullopt;
  r.preprocessed = optional_field<std::string>(j, "preprocessed");
  r.units = j.value("units", std::vector<AtomicUnit>{});
  r.diagnostics = j.value("diagnostics", std::vector<std::string>{});
  r.status = enum_field<RecordStatus>(j, "status", parse_record_status);
  r.error = optional_field<std::string>(j, "error");
}

void to_json(Json& j, const ScoreReport& r) {
  Json cats = Json::object();
  for (const auto& [name, cs] : r.per_category) cats[name] = Json{{"score", cs.score}, {"n", cs.n}};
  j = Json{{"model_id", r.model_id},
           {"model_size", r.model_size},
           {"dahl_score", r.dahl_score},
           {"per_category", cats},
           {"n_total", r.n_total},
           {"n_scored", r.n_scored},
           {"n_excluded_noncommittal", r.n_excluded_noncommittal},
           {"n_excluded_unknown", r.n_excluded_unknown},
           {"n_excluded_mismatch", r.n_excluded_mismatch},
           {"n_failed", r.n_failed},
           {"avg_response_length_chars", r.avg_response_length_chars},
           {"avg_raw_response_length_chars", r.avg_raw_response_length_chars},
           {"pooled_unit_precision", r.pooled_unit_precision}};
}

void from_json(const Json& j, ScoreReport& r) {
  r.model_id = j.at("model_id").get<std::string>();
  r.model_size = j.value("model_size", std::string("?"));
  r.dahl_score = j.at("dahl_score").get<double>();
  r.per_category.clear();
  for (const auto& [name, cs] : j.at("per_category").items()) {
    r.per_category[name] = CategoryScore{cs.at("score").get<double>(), cs.at("n").get<std::size_t>()};
  }
  r.n_total = j.at("n_total").get<std::size_t>();
  r.n_scored = j.at("n_scored").get<std::size_t>();
  r.n_excluded_noncommittal = j.at("n_excluded_noncommittal").get<std::size_t>();
  r.n_excluded_unknown = j.at("n_excluded_unknown").get<std::size_t>();
  r.n_excluded_mismatch = j.at("n_excluded_mismatch").get<std::size_t>();
  r.n_failed = j.at("n_failed").get<std::size_t>();
  r.avg_response_length_chars = j.at("avg_response_length_chars").get<double>();
  r.avg_raw_response_length_chars = j.value("avg_raw_response_length_chars", 0.0);
  r.pooled_unit_precision = j.value("pooled_unit_precision", 0.0);
}

std::string dump_line(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate_record(const EvalRecord& r) {
  std::vector<std::string> v;
  if (r.question_id.empty()) v.emplace_back("question_id must be non-empty");
  if (r.model_id.empty()) v.emplace_back("model_id must be non-empty");
  for (auto& m : validate(r.gen_config)) v.push_back("gen_config: " + m);

  for (std::size_t i = 0; i < r.units.size(); ++i) {
    const auto& u = r.units[i];
    if (u.index != i) {
      v.push_back("unit indices must be contiguous from 0 (position " + std::to_string(i) +
                  " has index " + std::to_string(u.index) + ")");
      break;
    }
  }
  for (const auto& u : r.units) {
    if (text::trim(u.text).empty()) {
      v.push_back("unit " + std::to_string(u.index) + " has empty text");
    }
  }

  const bool has_units = !r.units.empty();
  switch (r.status) {
    case RecordStatus::Pending:
      if (has_units) v.emplace_back("status pending requires empty units");
      if (r.preprocessed) v.emplace_back("status pending must not carry preprocessed text");
      break;
    case RecordStatus::Preprocessed:
      if (has_units) v.emplace_back("status preprocessed requires empty units");
      if (!r.preprocessed || r.preprocessed->empty()) {
        v.emplace_back("status preprocessed requires non-empty preprocessed text");
      }
      break;
    case RecordStatus::ExcludedNoncommittal:
      if (has_units) v.emplace_back("status excluded_noncommittal requires empty units");
      break;
    case RecordStatus::Split:
    case RecordStatus::Checked:
    case RecordStatus::Scored:
    case RecordStatus::ExcludedUnknown:
    case RecordStatus::ExcludedMismatch:
      if (!has_units) {
        v.push_back("status " + std::string(to_string(r.status)) + " requires non-empty units");
      }
      break;
    case RecordStatus::Failed:
      break;
  }

  if (r.status == RecordStatus::Checked || r.status == RecordStatus::Scored) {
    for (const auto& u : r.units) {
      if (!u.verdict) {
        v.push_back("unit " + std::to_string(u.index) + " lacks a verdict");
      } else if (*u.verdict == Verdict::Unknown) {
        v.push_back("unit " + std::to_string(u.index) + " has an Unknown verdict in a " +
                    std::string(to_string(r.status)) + " record");
      }
    }
  }
  if (r.status == RecordStatus::Split) {
    for (const auto& u : r.units) {
      if (u.verdict) {
        v.emplace_back("status split must not carry verdicts");
        break;
      }
    }
  }
  return v;
}

std::vector<std::string> validate_record(const EvalRecord& r, const CategorySet& categories) {
  auto v = validate_record(r);
  if (!categories.contains(r.category)) {
    v.push_back("category '" + r.category.name + "' is not in the configured category set");
  }
  return v;
}

std::vector<std::string> validate_question(const Question& q, const CategorySet& categories) {
  std::vector<std::string> v;
  if (q.question_id.empty()) v.emplace_back("question_id must be non-empty");
  if (text::trim(q.text).empty()) v.emplace_back("question text must be non-empty");
  if (!categories.contains(q.category)) {
    v.push_back("category '" + q.category.name + "' is not in the configured category set");
  }
  if (q.review_override == ReviewOverride::ForceDrop) {
    v.emplace_back("a kept question cannot carry review_override=force_drop");
  } else if (!q.filter_trace.empty() && q.review_override != ReviewOverride::ForceKeep) {
    v.emplace_back("a kept question with a non-empty filter_trace requires review_override=force_keep");
  }
  return v;
}

std::vector<std::string> validate_document(const SourceDocument& d) {
  std::vector<std::string> v;
  if (d.doc_id.empty()) v.emplace_back("doc_id must be non-empty");
  if (text::trim(d.body).empty()) v.emplace_back("body must be non-empty");
  return v;
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot rename into place: " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
std::size_t write_records(std::span<const T> records, const fs::path& path) {
  std::string buf;
  for (const auto& r : records) {
    buf += dump_line(Json(r));
    buf.push_back('\n');
  }
  write_file_atomic(path, buf);
  return records.size();
}

template std::size_t write_records<EvalRecord>(std::span<const EvalRecord>, const fs::path&);
template std::size_t write_records<Question>(std::span<const Question>, const fs::path&);
template std::size_t write_records<SourceDocument>(std::span<const SourceDocument>,
                                                   const fs::path&);

namespace {

template <typename T, typename Validate>
ReadResult<T> read_jsonl(const fs::path& path, Validate&& check) {
  if (!fs::exists(path)) throw IoError("file not found: " + path.string());
  const auto contents = read_file(path);
  auto lines = text::split_lines(contents);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();

  ReadResult<T> result;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    if (text::trim(lines[i]).empty()) {
      result.diagnostics.push_back({lineno, "empty line"});
      continue;
    }
    T value;
    try {
      value = Json::parse(lines[i]).get<T>();
    } catch (const std::exception& e) {
      result.diagnostics.push_back({lineno, std::string("malformed record: ") + e.what()});
      continue;
    }
    const auto violations = check(value);
    if (!violations.empty()) {
      std::string msg = "invariant violated: ";
      for (std::size_t k = 0; k < violations.size(); ++k) {
        if (k) msg += "; ";
        msg += violations[k];
      }
      result.diagnostics.push_back({lineno, msg});
      continue;
    }
    result.records.push_back(std::move(value));
  }
  return result;
}

}  // namespace

ReadResult<EvalRecord> read_eval_records(const fs::path& path) {
  return read_jsonl<EvalRecord>(path, [](const EvalRecord& r) { return validate_record(r); });
}

ReadResult<EvalRecord> read_eval_records(const fs::path& path, const CategorySet& categories) {
  return read_jsonl<EvalRecord>(
      path, [&](const EvalRecord& r) { return validate_record(r, categories); });
}

ReadResult<Question> read_questions(const fs::path& path, const CategorySet& categories) {
  return read_jsonl<Question>(
      path, [&](const Question& q) { return validate_question(q, categories); });
}

ReadResult<SourceDocument> read_documents(const fs::path& path) {
  return read_jsonl<SourceDocument>(path,
                                    [](const SourceDocument& d) { return validate_document(d); });
}

}  // namespace dahl
