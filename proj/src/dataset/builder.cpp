#include "dahl/dataset/builder.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "dahl/core/errors.hpp"
#include "dahl/core/parallel.hpp"
#include "dahl/core/text.hpp"

namespace dahl::dataset {
namespace {

std::string normalize_key(std::string_view s) { return text::collapse_whitespace(s); }

std::optional<std::string_view> strip_list_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')') &&
      (i + 1 == line.size() || text::is_space(line[i + 1]))) {
    return text::trim(line.substr(i + 1));
  }
  for (std::string_view bullet : {"-", "*", "\xE2\x80\xA2"}) {
    if (line.starts_with(bullet)) {
      const auto rest = line.substr(bullet.size());
      if (rest.empty() || text::is_space(rest.front())) return text::trim(rest);
    }
  }
  return std::nullopt;
}

}  // namespace

void to_json(Json& j, const FilterRule& r) {
  j = Json{{"rule_id", r.rule_id}, {"pattern", r.pattern}, {"description", r.description}};
}

void from_json(const Json& j, FilterRule& r) {
  r.rule_id = j.at("rule_id").get<std::string>();
  r.pattern = j.at("pattern").get<std::string>();
  r.description = j.value("description", std::string{});
}

FilterRuleSet::FilterRuleSet(std::vector<FilterRule> rules) : rules_(std::move(rules)) {
  std::unordered_set<std::string> ids;
  for (const auto& r : rules_) {
    if (r.rule_id.empty()) throw ConfigError("filter rule with empty rule_id");
    if (!ids.insert(r.rule_id).second) throw ConfigError("duplicate filter rule id: " + r.rule_id);
    try {
      compiled_.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw ConfigError("filter rule " + r.rule_id + " does not compile: " + e.what());
    }
  }
}

FilterRuleSet FilterRuleSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rules file: " + path);
  std::vector<FilterRule> rules;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      rules.push_back(Json::parse(line).get<FilterRule>());
    } catch (const Json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed rule: " + e.what());
    }
  }
  return FilterRuleSet(std::move(rules));
}

FilterRuleSet FilterRuleSet::defaults() {
  return FilterRuleSet({
      {"R1",
       R"(\b(?:the|this|that|these|those|their|its|our|his|her)\s+(?:[\w-]+\s+){0,2}(?:stud(?:y|ies)|analys[ie]s|papers?|research|articles?|authors?|findings?)\b)",
       "demonstrative or possessive referring to a specific study, paper or its authors"},
      {"R2",
       R"(\b(?:mentioned|inferred|addressed|observed|suggested|described|discussed|reported)\b)",
       "reporting participle that presupposes a source text"},
      {"R3", R"(\b(?:was|were)\s+(?:used|identified|found|observed|assessed|defined)\b)",
       "past passive describing what a specific study did"},
  });
}

std::vector<std::string> FilterRuleSet::matching(std::string_view question) const {
  std::vector<std::string> ids;
  const std::string q(question);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (std::regex_search(q, compiled_[i])) ids.push_back(rules_[i].rule_id);
  }
  return ids;
}

FilterDecision filter_context_dependent(std::string_view question, const FilterRuleSet& rules) {
  FilterDecision d;
  d.rule_ids = rules.matching(question);
  d.keep = d.rule_ids.empty();
  return d;
}

OverrideList::OverrideList(std::vector<std::string> force_keep, std::vector<std::string> force_drop) {
  for (const auto& k : force_keep) keep_.insert(normalize_key(k));
  for (const auto& d : force_drop) {
    auto key = normalize_key(d);
    if (keep_.count(key)) throw ConfigError("override entry in both force_keep and force_drop: " + key);
    drop_.insert(std::move(key));
  }
}

OverrideList OverrideList::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open overrides file: " + path);
  try {
    const auto j = Json::parse(in);
    return OverrideList(j.value("force_keep", std::vector<std::string>{}),
                        j.value("force_drop", std::vector<std::string>{}));
  } catch (const Json::exception& e) {
    throw ConfigError("malformed overrides file " + path + ": " + e.what());
  }
}

ReviewOverride OverrideList::lookup(std::string_view question_id, std::string_view text) const {
  const auto key = normalize_key(text);
  const std::string id(question_id);
  if (keep_.count(key) || (!id.empty() && keep_.count(id))) return ReviewOverride::ForceKeep;
  if (drop_.count(key) || (!id.empty() && drop_.count(id))) return ReviewOverride::ForceDrop;
  return ReviewOverride::None;
}

std::vector<Candidate> apply_review_overrides(std::vector<Candidate> candidates,
                                              const OverrideList& overrides) {
  for (auto& c : candidates) {
    const auto o = overrides.lookup(c.question.question_id, c.question.text);
    c.question.review_override = o;
    if (o == ReviewOverride::ForceKeep) c.keep = true;
    if (o == ReviewOverride::ForceDrop) c.keep = false;
  }
  return candidates;
}

CategoryMatch match_category(std::string_view reply, const CategorySet& categories) {
  auto cleaned = text::trim(reply);
  while (!cleaned.empty() && (cleaned.back() == '.' || cleaned.back() == '"' || cleaned.back() == '\'')) {
    cleaned.remove_suffix(1);
  }
  while (!cleaned.empty() && (cleaned.front() == '"' || cleaned.front() == '\'')) {
    cleaned.remove_prefix(1);
  }
  if (auto exact = categories.find(cleaned)) return CategoryMatch{*exact, false, {exact->name}};

  // Whole-word mentions; a label nested inside a longer mentioned label
  // ("Medicine" in "Community Medicine") does not count.
  const auto hay = text::to_lower(reply);
  struct Span {
    std::size_t begin, end;
    const std::string* label;
  };
  std::vector<Span> spans;
  for (const auto& label : categories.labels()) {
    const auto needle = text::to_lower(label);
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
      if (text::bounded_match_at(hay, needle, pos)) spans.push_back({pos, pos + needle.size(), &label});
    }
  }
  std::vector<std::string> mentioned;
  for (const auto& s : spans) {
    const bool nested = std::any_of(spans.begin(), spans.end(), [&](const Span& o) {
      return o.label != s.label && o.begin <= s.begin && s.end <= o.end && (o.end - o.begin) > (s.end - s.begin);
    });
    if (!nested && std::find(mentioned.begin(), mentioned.end(), *s.label) == mentioned.end()) {
      mentioned.push_back(*s.label);
    }
  }
  if (mentioned.size() == 1) return CategoryMatch{CategoryLabel{mentioned.front()}, false, mentioned};
  CategoryMatch m{categories.fallback(), mentioned.size() >= 2, mentioned};
  return m;
}

PromptTemplate default_question_template() {
  return PromptTemplate(
      "Read the research paper below and write {n} examination questions about the biomedical "
      "knowledge it covers. Every question must be answerable on its own by someone who has "
      "not seen the paper, so never refer to the paper, its authors, or what was done or "
      "found in it. Return the questions as a numbered list, one per line.\n\n"
      "Title: {title}\n\n{body}\n");
}

PromptTemplate default_category_template() {
  return PromptTemplate(
      "Assign the biomedical question below to exactly one of these categories:\n{categories}\n"
      "If no category fits, answer Other. Reply with the category name only.\n\n"
      "Question: {question}\n");
}

std::vector<std::string> parse_question_list(std::string_view raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& line : text::split_lines(raw)) {
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (auto item = strip_list_marker(t)) t = *item;
    if (t.empty() || (t.back() != '?' && t.back() != '.')) continue;
    std::string q = text::collapse_whitespace(t);
    if (seen.insert(text::to_lower(q)).second) out.push_back(std::move(q));
  }
  if (out.empty()) throw ParseError("no questions found in generator output", std::string(raw));
  return out;
}

std::vector<std::string> generate_questions(const SourceDocument& doc, llm::ChatBackend& backend,
                                            const PromptTemplate& tmpl, int questions_per_doc,
                                            const GenConfig& cfg) {
  if (text::trim(doc.body).empty()) {
    throw PreconditionError("document " + doc.doc_id + " has an empty body");
  }
  tmpl.require({"title", "body"});
  const auto prompt = tmpl.render(
      {{"title", doc.title}, {"body", doc.body}, {"n", std::to_string(questions_per_doc)}});
  const auto resp = backend.complete(llm::ChatRequest{backend.backend_id(), std::nullopt, prompt, cfg});
  return parse_question_list(resp.text);
}

CategorizeResult categorize(std::string_view question, llm::ChatBackend& backend,
                            const CategorySet& categories, const PromptTemplate& tmpl,
                            const GenConfig& cfg) {
  std::string listing;
  for (const auto& label : categories.labels()) listing += "- " + label + "\n";
  const auto prompt = tmpl.render({{"question", std::string(question)}, {"categories", listing}});
  auto resp = backend.complete(llm::ChatRequest{backend.backend_id(), std::nullopt, prompt, cfg});
  return CategorizeResult{match_category(resp.text, categories), std::move(resp.text)};
}

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Kept: return "kept";
    case Outcome::DroppedFilter: return "dropped_filter";
    case Outcome::DroppedOverride: return "dropped_override";
    case Outcome::DroppedAmbiguous: return "dropped_ambiguous";
    case Outcome::CategorizeFailed: return "categorize_failed";
  }
  return "?";
}

Json to_json(const BuildReport& r) {
  Json failures = Json::array();
  for (const auto& f : r.failures) failures.push_back({{"id", f.id}, {"message", f.message}});
  Json decisions = Json::array();
  for (const auto& d : r.decisions) {
    decisions.push_back({{"question_id", d.question_id},
                         {"doc_id", d.doc_id},
                         {"text", d.text},
                         {"filter_trace", d.filter_trace},
                         {"review_override", std::string(dahl::to_string(d.review_override))},
                         {"outcome", std::string(to_string(d.outcome))},
                         {"category", d.category}});
  }
  return Json{{"n_documents", r.n_documents},
              {"n_documents_failed", r.n_documents_failed},
              {"n_candidates", r.n_candidates},
              {"n_filter_dropped", r.n_filter_dropped},
              {"n_force_keep", r.n_force_keep},
              {"n_force_drop", r.n_force_drop},
              {"n_ambiguous", r.n_ambiguous},
              {"n_categorize_failed", r.n_categorize_failed},
              {"n_kept", r.n_kept},
              {"per_rule", r.per_rule},
              {"per_category", r.per_category},
              {"failures", failures},
              {"decisions", decisions}};
}

BuildResult build_dataset(std::span<const SourceDocument> corpus, llm::ChatBackend& generator,
                          llm::ChatBackend& categorizer, const FilterRuleSet& rules,
                          const OverrideList& overrides, const CategorySet& categories,
                          const BuildOptions& opts) {
  {
    std::unordered_set<std::string> ids;
    for (const auto& d : corpus) {
      if (!d.doc_id.empty() && !ids.insert(d.doc_id).second) {
        throw PreconditionError("duplicate doc_id in corpus: " + d.doc_id);
      }
    }
  }

  struct DocOutcome {
    std::optional<std::string> failure;
    std::vector<DecisionEntry> decisions;
    std::vector<std::optional<std::string>> categorize_errors;
  };
  std::vector<DocOutcome> outcomes(corpus.size());

  parallel_for(corpus.size(), opts.workers, [&](std::size_t di) {
    const auto& doc = corpus[di];
    auto& out = outcomes[di];
    std::vector<std::string> texts;
    try {
      if (auto v = validate_document(doc); !v.empty()) throw PreconditionError(v.front());
      texts = generate_questions(doc, generator, opts.question_template, opts.questions_per_doc);
    } catch (const Error& e) {
      out.failure = e.what();
      return;
    }

    std::vector<Candidate> candidates;
    for (std::size_t k = 0; k < texts.size(); ++k) {
      Candidate c;
      c.question.question_id = doc.doc_id + "-q" + std::to_string(k + 1);
      c.question.text = texts[k];
      c.question.source_doc_id = doc.doc_id;
      const auto decision = filter_context_dependent(texts[k], rules);
      c.question.filter_trace = decision.rule_ids;
      c.keep = decision.keep;
      candidates.push_back(std::move(c));
    }
    candidates = apply_review_overrides(std::move(candidates), overrides);

    for (auto& c : candidates) {
      DecisionEntry d;
      d.question_id = c.question.question_id;
      d.doc_id = doc.doc_id;
      d.text = c.question.text;
      d.filter_trace = c.question.filter_trace;
      d.review_override = c.question.review_override;
      std::optional<std::string> error;
      if (!c.keep) {
        d.outcome = d.review_override == ReviewOverride::ForceDrop ? Outcome::DroppedOverride
                                                                   : Outcome::DroppedFilter;
      } else {
        try {
          const auto cat = categorize(c.question.text, categorizer, categories, opts.category_template);
          if (cat.match.ambiguous) {
            d.outcome = Outcome::DroppedAmbiguous;
          } else {
            d.outcome = Outcome::Kept;
            d.category = cat.match.label.name;
          }
        } catch (const Error& e) {
          d.outcome = Outcome::CategorizeFailed;
          error = e.what();
        }
      }
      out.decisions.push_back(std::move(d));
      out.categorize_errors.push_back(std::move(error));
    }
  });

  BuildResult result;
  auto& rep = result.report;
  rep.n_documents = corpus.size();
  for (std::size_t di = 0; di < corpus.size(); ++di) {
    auto& out = outcomes[di];
    if (out.failure) {
      ++rep.n_documents_failed;
      rep.failures.push_back({corpus[di].doc_id, *out.failure});
      continue;
    }
    for (std::size_t k = 0; k < out.decisions.size(); ++k) {
      auto& d = out.decisions[k];
      ++rep.n_candidates;
      for (const auto& id : d.filter_trace) ++rep.per_rule[id];
      if (!d.filter_trace.empty()) ++rep.n_filter_dropped;
      if (d.review_override == ReviewOverride::ForceKeep) ++rep.n_force_keep;
      if (d.review_override == ReviewOverride::ForceDrop) ++rep.n_force_drop;
      switch (d.outcome) {
        case Outcome::Kept: {
          ++rep.n_kept;
          ++rep.per_category[d.category];
          result.questions.push_back(Question{d.question_id, d.text, CategoryLabel{d.category},
                                              d.doc_id, d.filter_trace, d.review_override});
          break;
        }
        case Outcome::DroppedAmbiguous: ++rep.n_ambiguous; break;
        case Outcome::CategorizeFailed:
          ++rep.n_categorize_failed;
          rep.failures.push_back({d.question_id, *out.categorize_errors[k]});
          break;
        default: break;
      }
      rep.decisions.push_back(std::move(d));
    }
  }
  return result;
}

}  // namespace dahl::dataset
