#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dahl/core/categories.hpp"
#include "dahl/core/types.hpp"

namespace dahl {

using Json = nlohmann::json;

// JSON mapping. nlohmann::json keeps object keys sorted, which gives the
// alphabetical field order of the persisted files.
void to_json(Json& j, const GenConfig& g);
void from_json(const Json& j, GenConfig& g);
void to_json(Json& j, const SourceDocument& d);
void from_json(const Json& j, SourceDocument& d);
void to_json(Json& j, const Question& q);
void from_json(const Json& j, Question& q);
void to_json(Json& j, const AtomicUnit& u);
void from_json(const Json& j, AtomicUnit& u);
void to_json(Json& j, const EvalRecord& r);
void from_json(const Json& j, EvalRecord& r);
void to_json(Json& j, const ScoreReport& r);
void from_json(const Json& j, ScoreReport& r);

/// Compact single-line UTF-8 dump used for every persisted line.
std::string dump_line(const Json& j);

struct LineDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

template <typename T>
struct ReadResult {
  std::vector<T> records;
  std::vector<LineDiagnostic> diagnostics;

  bool ok() const noexcept { return diagnostics.empty(); }
};

/// Invariant checks. Empty result means valid.
std::vector<std::string> validate_record(const EvalRecord& r);
std::vector<std::string> validate_record(const EvalRecord& r, const CategorySet& categories);
std::vector<std::string> validate_question(const Question& q, const CategorySet& categories);
std::vector<std::string> validate_document(const SourceDocument& d);

/// Writes one JSON object per line through a temp file and rename, so a
/// failed write never leaves a partial file at `path`. Returns the count.
template <typename T>
std::size_t write_records(std::span<const T> records, const std::filesystem::path& path);

/// Parses every well-formed line; malformed or invariant-violating lines are
/// reported with their line number. Throws IoError if the file is missing.
ReadResult<EvalRecord> read_eval_records(const std::filesystem::path& path);
ReadResult<EvalRecord> read_eval_records(const std::filesystem::path& path,
                                         const CategorySet& categories);
ReadResult<Question> read_questions(const std::filesystem::path& path,
                                    const CategorySet& categories);
ReadResult<SourceDocument> read_documents(const std::filesystem::path& path);

/// Atomic whole-file write (temp file in the same directory, then rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

extern template std::size_t write_records<EvalRecord>(std::span<const EvalRecord>,
                                                      const std::filesystem::path&);
extern template std::size_t write_records<Question>(std::span<const Question>,
                                                    const std::filesystem::path&);
extern template std::size_t write_records<SourceDocument>(std::span<const SourceDocument>,
                                                          const std::filesystem::path&);

}  // namespace dahl
