#include "dahl/scoring/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dahl/core/records.hpp"
#include "dahl/core/text.hpp"

namespace dahl::scoring {
namespace {

double sorted_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string md_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

double response_precision(std::span<const Verdict> verdicts) {
  if (verdicts.empty()) throw PreconditionError("response_precision of an empty verdict list");
  std::size_t trues = 0;
  for (auto v : verdicts) {
    if (v == Verdict::Unknown) {
      throw PreconditionError("response_precision with an Unknown verdict; exclude the record first");
    }
    if (v == Verdict::True) ++trues;
  }
  return static_cast<double>(trues) / static_cast<double>(verdicts.size());
}

double response_precision(const EvalRecord& record) {
  std::vector<Verdict> verdicts;
  verdicts.reserve(record.units.size());
  for (const auto& u : record.units) {
    if (!u.verdict) {
      throw PreconditionError("record " + record.question_id + " has a unit without verdict");
    }
    verdicts.push_back(*u.verdict);
  }
  return response_precision(verdicts);
}

bool is_scorable(const EvalRecord& record) noexcept {
  return record.status == RecordStatus::Checked || record.status == RecordStatus::Scored;
}

void mark_scored(std::span<EvalRecord> records) {
  for (auto& r : records) {
    if (r.status == RecordStatus::Checked) r.status = RecordStatus::Scored;
  }
}

std::map<std::string, CategoryScore> per_category_scores(std::span<const EvalRecord> records) {
  std::map<std::string, std::vector<double>> buckets;
  for (const auto& r : records) {
    if (is_scorable(r)) buckets[r.category.name].push_back(response_precision(r));
  }
  std::map<std::string, CategoryScore> out;
  for (auto& [name, values] : buckets) {
    const auto n = values.size();
    out[name] = CategoryScore{sorted_sum(std::move(values)) / static_cast<double>(n), n};
  }
  return out;
}

ScoreReport dahl_score(std::span<const EvalRecord> records, std::string model_size) {
  ScoreReport rep;
  rep.model_size = std::move(model_size);
  rep.n_total = records.size();

  std::vector<double> precisions;
  std::uint64_t clean_chars = 0;
  std::uint64_t raw_chars = 0;
  std::uint64_t true_units = 0;
  std::uint64_t all_units = 0;
  for (const auto& r : records) {
    if (rep.model_id.empty()) {
      rep.model_id = r.model_id;
    } else if (r.model_id != rep.model_id) {
      throw PreconditionError("dahl_score over records of several models: " + rep.model_id +
                              ", " + r.model_id);
    }
    switch (r.status) {
      case RecordStatus::Checked:
      case RecordStatus::Scored: {
        precisions.push_back(response_precision(r));
        clean_chars += text::utf8_length(r.preprocessed.value_or(std::string{}));
        raw_chars += text::utf8_length(r.raw_response);
        for (const auto& u : r.units) true_units += *u.verdict == Verdict::True ? 1 : 0;
        all_units += r.units.size();
        break;
      }
      case RecordStatus::ExcludedNoncommittal: ++rep.n_excluded_noncommittal; break;
      case RecordStatus::ExcludedUnknown: ++rep.n_excluded_unknown; break;
      case RecordStatus::ExcludedMismatch: ++rep.n_excluded_mismatch; break;
      case RecordStatus::Failed: ++rep.n_failed; break;
      default:
        throw PreconditionError("record " + r.question_id + " has unfinished status " +
                                std::string(to_string(r.status)));
    }
  }
  rep.n_scored = precisions.size();
  if (rep.n_scored == 0) throw NoScorableResponses();

  const auto n = static_cast<double>(rep.n_scored);
  rep.dahl_score = sorted_sum(std::move(precisions)) / n;
  rep.per_category = per_category_scores(records);
  rep.avg_response_length_chars = static_cast<double>(clean_chars) / n;
  rep.avg_raw_response_length_chars = static_cast<double>(raw_chars) / n;
  rep.pooled_unit_precision = static_cast<double>(true_units) / static_cast<double>(all_units);
  return rep;
}

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  return std::nullopt;
}

std::string_view file_extension(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::Json: return "json";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Markdown: return "md";
  }
  return "txt";
}

std::string render_markdown_table(std::span<const ScoreReport> reports) {
  std::ostringstream os;
  os << "| Model | Size | Avg. Length | DAHL Score |\n";
  os << "|---|---|---:|---:|\n";
  for (const auto& r : reports) {
    char len[32];
    std::snprintf(len, sizeof len, "%.0f", r.avg_response_length_chars);
    os << "| " << md_cell(r.model_id) << " | " << md_cell(r.model_size) << " | " << len << " | "
       << fixed4(r.dahl_score) << " |\n";
  }
  return os.str();
}

std::string render_report(const ScoreReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return Json(report).dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
    case ReportFormat::Csv: {
      std::ostringstream os;
      os << "model,category,n,score\n";
      for (const auto& [name, cs] : report.per_category) {
        os << csv_field(report.model_id) << ',' << csv_field(name) << ',' << cs.n << ','
           << fixed4(cs.score) << '\n';
      }
      os << csv_field(report.model_id) << ",ALL," << report.n_scored << ','
         << fixed4(report.dahl_score) << '\n';
      return os.str();
    }
    case ReportFormat::Markdown: {
      std::ostringstream os;
      os << render_markdown_table(std::span<const ScoreReport>(&report, 1));
      os << "\n| Category | n | DAHL Score |\n|---|---:|---:|\n";
      for (const auto& [name, cs] : report.per_category) {
        os << "| " << md_cell(name) << " | " << cs.n << " | " << fixed4(cs.score) << " |\n";
      }
      os << "\nScored: " << report.n_scored << " of " << report.n_total
         << " (noncommittal " << report.n_excluded_noncommittal << ", unknown "
         << report.n_excluded_unknown << ", mismatch " << report.n_excluded_mismatch
         << ", failed " << report.n_failed << ")\n";
      return os.str();
    }
  }
  throw PreconditionError("unknown report format");
}

std::string render_report(const ScoreReport& report, std::string_view format) {
  const auto f = parse_report_format(format);
  if (!f) throw PreconditionError("unknown report format: " + std::string(format));
  return render_report(report, *f);
}

ScoreReport parse_report_json(std::string_view json) {
  try {
    return Json::parse(json).get<ScoreReport>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what(), std::string(json));
  }
}

}  // namespace dahl::scoring
