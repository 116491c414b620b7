#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dahl/core/prompt.hpp"
#include "dahl/core/types.hpp"
#include "dahl/llm/backend.hpp"

namespace dahl::response {

/// Strength of the normalization behind a sentence's dedup key.
struct KeyNormalization {
  bool case_fold = true;
  bool collapse_whitespace = true;
  bool strip_terminal_punctuation = true;
};

struct Sentence {
  std::string text;
  std::string normalized_key;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

std::string normalized_key(std::string_view sentence, const KeyNormalization& norm = {});

/// Abbreviations whose trailing period never ends a sentence (lower-case, with the period).
const std::vector<std::string>& default_abbreviations();

/// Refusal / ignorance phrases marking a noncommittal response.
const std::vector<std::string>& default_noncommittal_phrases();

struct PreprocessOptions {
  std::vector<std::string> abbreviations = default_abbreviations();
  std::vector<std::string> noncommittal_phrases = default_noncommittal_phrases();
  KeyNormalization key_normalization;
};

/// Splits at '.', '!' or '?' followed by whitespace and an upper-case letter
/// or digit. Abbreviations, decimals and bare list numbers are never split.
/// Sentence text is trimmed with internal whitespace collapsed.
std::vector<Sentence> segment_sentences(std::string_view text, const PreprocessOptions& opts = {});

/// Removes a leading echo of `prompt` (whitespace- and case-insensitive).
/// Returns `raw` unchanged when it does not start with the prompt.
std::string strip_prompt_echo(std::string_view raw, std::string_view prompt);

/// Keeps the first sentence for each normalized key, preserving order.
std::vector<Sentence> dedup_sentences(std::vector<Sentence> sentences);

/// Drops the final sentence when it lacks terminal punctuation. Applied
/// whatever the finish reason, since a cut-off sentence can occur either way.
std::vector<Sentence> drop_incomplete_tail(std::vector<Sentence> sentences,
                                           std::optional<FinishReason> finish_reason = std::nullopt);

/// True iff every sentence of `text` consists only of refusal phrases (plus
/// filler such as "sorry" or "unfortunately").
bool detect_noncommittal(std::string_view text, const PreprocessOptions& opts = {});

std::string join_sentences(const std::vector<Sentence>& sentences);

/// echo strip -> segment -> dedup -> tail drop -> rejoin with single spaces.
/// Requires status pending. Sets status preprocessed, or excluded_noncommittal
/// for a refusal-only or empty result.
EvalRecord preprocess(EvalRecord record, const PreprocessOptions& opts = {});

/// Default generation template: the bare question, with no extra instructions.
PromptTemplate default_generation_template();

/// Asks the generator for an answer. Backend failures produce a failed record.
EvalRecord generate_response(const Question& q, llm::ChatBackend& backend, const GenConfig& cfg,
                             const PromptTemplate& tmpl = default_generation_template());

}  // namespace dahl::response
