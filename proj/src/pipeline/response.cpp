#include "dahl/pipeline/response.hpp"

#include <algorithm>
#include <unordered_set>

#include "dahl/core/errors.hpp"
#include "dahl/core/text.hpp"

namespace dahl::response {
namespace {

bool is_terminal_punct(char c) noexcept { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) noexcept { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool is_opener(char c) noexcept { return c == '"' || c == '\'' || c == '(' || c == '['; }

bool starts_sentence(char c) noexcept { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); }

// Multi-byte closing quotes (’ ”) that may follow terminal punctuation.
std::size_t closer_len(std::string_view s, std::size_t i) noexcept {
  if (i < s.size() && is_closer(s[i])) return 1;
  if (s.substr(i).starts_with("\xE2\x80\x99") || s.substr(i).starts_with("\xE2\x80\x9D")) return 3;
  return 0;
}

bool ends_with_terminal(std::string_view s) {
  s = text::trim(s);
  for (;;) {
    if (s.empty()) return false;
    if (is_closer(s.back())) {
      s.remove_suffix(1);
    } else if (s.ends_with("\xE2\x80\x99") || s.ends_with("\xE2\x80\x9D")) {
      s.remove_suffix(3);
    } else {
      break;
    }
  }
  return !s.empty() && is_terminal_punct(s.back());
}

// The whitespace-delimited token ending at `dot` (inclusive), minus openers.
std::string_view token_before(std::string_view s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !text::is_space(s[b - 1])) --b;
  while (b < dot && is_opener(s[b])) ++b;
  return s.substr(b, dot - b + 1);
}

bool protected_period(std::string_view s, std::size_t sentence_start, std::size_t dot,
                      const std::vector<std::string>& abbreviations) {
  const auto token = token_before(s, dot);
  const auto lowered = text::to_lower(token);
  if (std::find(abbreviations.begin(), abbreviations.end(), lowered) != abbreviations.end()) {
    return true;
  }
  // A bare enumerator such as "1." at the start of a sentence.
  const auto body = token.substr(0, token.size() - 1);
  if (!body.empty() && std::all_of(body.begin(), body.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    const auto before = s.substr(sentence_start, dot + 1 - token.size() - sentence_start);
    if (text::trim(before).empty()) return true;
  }
  return false;
}

Sentence make_sentence(std::string_view raw, const KeyNormalization& norm) {
  Sentence s;
  s.text = text::collapse_whitespace(raw);
  s.normalized_key = normalized_key(s.text, norm);
  return s;
}

}  // namespace

std::string normalized_key(std::string_view sentence, const KeyNormalization& norm) {
  std::string key = norm.collapse_whitespace ? text::collapse_whitespace(sentence)
                                             : std::string(sentence);
  if (norm.case_fold) key = text::to_lower(key);
  if (norm.strip_terminal_punctuation) {
    while (!key.empty() && (is_terminal_punct(key.back()) || text::is_space(key.back()))) {
      key.pop_back();
    }
  }
  return key;
}

const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> kList{
      "dr.",  "mr.",  "mrs.", "ms.",   "prof.", "fig.", "figs.", "e.g.", "i.e.",
      "al.",  "vs.",  "cf.",  "ca.",   "approx.", "no.", "nos.", "vol.", "pp.",
      "eq.",  "ref.", "st.",  "jr.",   "sr.",   "inc.", "ltd.", "dept.", "u.s."};
  return kList;
}

const std::vector<std::string>& default_noncommittal_phrases() {
  static const std::vector<std::string> kList{
      "it cannot be answered", "cannot be answered",  "i don't know",
      "i do not know",         "cannot be determined", "i'm not sure",
      "i am not sure",         "i cannot answer",      "i can't answer"};
  return kList;
}

std::vector<Sentence> segment_sentences(std::string_view s, const PreprocessOptions& opts) {
  std::vector<Sentence> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_terminal_punct(s[i])) {
      ++i;
      continue;
    }
    const std::size_t punct = i;
    std::size_t j = i;
    while (j < s.size() && is_terminal_punct(s[j])) ++j;
    while (std::size_t n = closer_len(s, j)) j += n;

    if (j >= s.size()) {
      i = j;
      break;
    }
    if (!text::is_space(s[j])) {
      i = j;
      continue;
    }
    std::size_t k = j;
    while (k < s.size() && text::is_space(s[k])) ++k;
    if (k >= s.size()) {
      i = k;
      break;
    }
    std::size_t first = k;
    while (first < s.size() && is_opener(s[first])) ++first;
    const bool boundary = first < s.size() && starts_sentence(s[first]);
    const bool single_period = s[punct] == '.' && (punct + 1 >= s.size() || !is_terminal_punct(s[punct + 1]));
    const bool guarded = single_period && protected_period(s, start, punct, opts.abbreviations);
    if (boundary && !guarded) {
      const auto piece = text::trim(s.substr(start, j - start));
      if (!piece.empty()) out.push_back(make_sentence(piece, opts.key_normalization));
      start = k;
    }
    i = k;
  }
  const auto tail = text::trim(s.substr(std::min(start, s.size())));
  if (!tail.empty()) out.push_back(make_sentence(tail, opts.key_normalization));
  return out;
}

std::string strip_prompt_echo(std::string_view raw, std::string_view prompt) {
  const auto target = text::to_lower(text::collapse_whitespace(prompt));
  if (target.empty()) return std::string(raw);

  std::size_t i = 0;
  while (i < raw.size() && text::is_space(raw[i])) ++i;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (i >= raw.size()) return std::string(raw);
    if (target[k] == ' ') {
      if (!text::is_space(raw[i])) return std::string(raw);
      while (i < raw.size() && text::is_space(raw[i])) ++i;
      continue;
    }
    char c = raw[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != target[k]) return std::string(raw);
    ++i;
  }
  // Whole-word boundary: "What is X" must not eat the start of "Xylophone".
  if (i < raw.size() && text::is_alnum(raw[i]) && text::is_alnum(target.back())) {
    return std::string(raw);
  }
  return std::string(text::trim(raw.substr(i)));
}

std::vector<Sentence> dedup_sentences(std::vector<Sentence> sentences) {
  std::unordered_set<std::string> seen;
  std::vector<Sentence> out;
  out.reserve(sentences.size());
  for (auto& s : sentences) {
    if (seen.insert(s.normalized_key).second) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> drop_incomplete_tail(std::vector<Sentence> sentences,
                                           std::optional<FinishReason> /*finish_reason*/) {
  if (!sentences.empty() && !ends_with_terminal(sentences.back().text)) sentences.pop_back();
  return sentences;
}

bool detect_noncommittal(std::string_view input, const PreprocessOptions& opts) {
  static const std::unordered_set<std::string> kFiller{
      "sorry", "unfortunately", "but", "however", "so", "well", "i'm", "i", "am",
      "apologize", "apologies", "honestly", "really", "this", "that", "question",
      "the", "answer", "to", "is", "it"};

  std::vector<std::string> phrases;
  for (const auto& p : opts.noncommittal_phrases) {
    auto n = text::to_lower(text::ascii_quotes(text::collapse_whitespace(p)));
    if (!n.empty()) phrases.push_back(std::move(n));
  }
  // Longest first so "it cannot be answered" wins over "cannot be answered".
  std::sort(phrases.begin(), phrases.end(),
            [](const auto& a, const auto& b) { return a.size() > b.size(); });

  const auto sentences = segment_sentences(input, opts);
  if (sentences.empty()) return false;
  bool any_phrase = false;
  for (const auto& sentence : sentences) {
    auto s = text::to_lower(text::ascii_quotes(sentence.text));
    for (const auto& p : phrases) {
      for (std::size_t pos = s.find(p); pos != std::string::npos; pos = s.find(p, pos + 1)) {
        if (text::bounded_match_at(s, p, pos)) {
          s.replace(pos, p.size(), " ");
          any_phrase = true;
        }
      }
    }
    // Whatever remains must be punctuation or filler words.
    std::string word;
    auto flush = [&]() {
      if (word.empty()) return true;
      const bool filler = kFiller.count(word) > 0;
      word.clear();
      return filler;
    };
    for (char c : s) {
      if (text::is_alnum(c) || c == '\'') {
        word.push_back(c);
      } else if (!flush()) {
        return false;
      }
    }
    if (!flush()) return false;
  }
  return any_phrase;
}

std::string join_sentences(const std::vector<Sentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out.push_back(' ');
    out += s.text;
  }
  return out;
}

EvalRecord preprocess(EvalRecord record, const PreprocessOptions& opts) {
  if (record.status != RecordStatus::Pending) {
    throw PreconditionError("preprocess requires status pending, got " +
                            std::string(to_string(record.status)));
  }
  const auto stripped = strip_prompt_echo(record.raw_response, record.prompt);
  auto sentences = segment_sentences(stripped, opts);
  sentences = dedup_sentences(std::move(sentences));
  sentences = drop_incomplete_tail(std::move(sentences), record.finish_reason);
  auto cleaned = join_sentences(sentences);

  const bool excluded = cleaned.empty() || detect_noncommittal(cleaned, opts);
  record.preprocessed = std::move(cleaned);
  record.status = excluded ? RecordStatus::ExcludedNoncommittal : RecordStatus::Preprocessed;
  return record;
}

PromptTemplate default_generation_template() { return PromptTemplate("{question}"); }

EvalRecord generate_response(const Question& q, llm::ChatBackend& backend, const GenConfig& cfg,
                             const PromptTemplate& tmpl) {
  if (auto v = validate(cfg); !v.empty()) throw PreconditionError("invalid GenConfig: " + v.front());

  EvalRecord rec;
  rec.question_id = q.question_id;
  rec.model_id = backend.backend_id();
  rec.category = q.category;
  rec.gen_config = cfg;
  rec.prompt = tmpl.render({{"question", q.text}});
  try {
    llm::ChatRequest req{backend.backend_id(), std::nullopt, rec.prompt, cfg};
    auto resp = backend.complete(req);
    rec.raw_response = std::move(resp.text);
    rec.finish_reason = resp.finish_reason;
    rec.status = RecordStatus::Pending;
  } catch (const Error& e) {
    rec.status = RecordStatus::Failed;
    rec.error = std::string("generation failed: ") + e.what();
  }
  return rec;
}

}  // namespace dahl::response
