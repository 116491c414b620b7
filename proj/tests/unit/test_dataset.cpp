#include <doctest.h>

#include <fstream>
#include <map>

#include "support/fixtures.hpp"
#include "dahl/app/config.hpp"
#include "dahl/core/errors.hpp"
#include "dahl/dataset/builder.hpp"

using namespace dahl;
using namespace dahl::dataset;

namespace {

using Ids = std::vector<std::string>;

const std::string kB1 =
    "Explain the significance of functional validation in the context of this research and how it is achieved.";
const std::string kB2 =
    "Which MEM was found to be the most computationally efficient, and how might this impact its use in research?";
const std::string kTable1 =
    "What is the incidence rate of cystic lymphangioma (CL) in live births, and where are the most common "
    "locations for CL to occur?";

const FilterRuleSet& shipped_rules() {
  static const auto rules = FilterRuleSet::load((app::default_resource_dir() / "filter_rules.jsonl").string());
  return rules;
}

Candidate candidate(const std::string& id, const std::string& text, const FilterRuleSet& rules) {
  Candidate c;
  c.question.question_id = id;
  c.question.text = text;
  const auto d = filter_context_dependent(text, rules);
  c.question.filter_trace = d.rule_ids;
  c.keep = d.keep;
  return c;
}

}  // namespace

TEST_CASE("context-dependence filter corpus") {
  const std::vector<std::pair<std::string, Ids>> corpus{
      {"What ethical considerations are addressed by the authors in relation to their research findings?",
       {"R1", "R2"}},
      {"What are the implications for practice suggested by the study?", {"R1", "R2"}},
      {"What tissue-specific patterns were observed in the usage of intronic PASs compared to PASs in exons?",
       {"R2", "R3"}},
      {"What challenges are associated with the protocol described in the study, and what solutions are "
       "suggested for troubleshooting?",
       {"R1", "R2"}},
      {"What method was used to assess the functional accuracy of the context-specific models?", {"R3"}},
      {kB1, {"R1"}},
      {kB2, {"R1", "R3"}},
      {kTable1, {}},
      {"Which drugs are first-line for hypertension in pregnancy?", {}},
      {"How is cystic fibrosis inherited?", {}},
  };
  for (const auto* rules : {&shipped_rules(), static_cast<const FilterRuleSet*>(nullptr)}) {
    const auto& set = rules ? *rules : FilterRuleSet::defaults();
    for (const auto& [q, want] : corpus) {
      const auto d = filter_context_dependent(q, set);
      CHECK_MESSAGE(d.rule_ids == want, q);
      CHECK(d.keep == want.empty());
    }
  }
  CHECK(shipped_rules().rules() == FilterRuleSet::defaults().rules());
}

TEST_CASE("filter matching is case-insensitive and word-bounded") {
  const auto& rules = FilterRuleSet::defaults();
  CHECK(rules.matching("WHAT WAS USED HERE?") == Ids{"R3"});
  CHECK(rules.matching("Which observations matter?").empty());
  CHECK(rules.matching("Their two main findings?") == Ids{"R1"});
  CHECK(rules.matching("The long and winding study?").empty());
}

TEST_CASE("adding a rule never turns a drop into a keep") {
  const std::vector<std::string> questions{kB1, kB2, kTable1, "What is discussed here?", "Why were they used?"};
  const auto base = FilterRuleSet::defaults().rules();
  auto extended = base;
  extended.push_back({"R9", "\\bhere\\b", "extra"});
  const FilterRuleSet a(base), b(extended);
  for (const auto& q : questions) {
    if (!filter_context_dependent(q, a).keep) CHECK_FALSE(filter_context_dependent(q, b).keep);
  }
}

TEST_CASE("FilterRuleSet construction errors") {
  CHECK_THROWS_AS(FilterRuleSet({{"R1", "a", ""}, {"R1", "b", ""}}), ConfigError);
  CHECK_THROWS_AS(FilterRuleSet({{"R1", "(", ""}}), ConfigError);
  CHECK_THROWS_AS(FilterRuleSet({{"", "a", ""}}), ConfigError);
  fixture::TempDir dir;
  std::ofstream(dir / "bad.jsonl") << "{\"rule_id\":\"R1\"}\n";
  CHECK_THROWS_AS(FilterRuleSet::load((dir / "bad.jsonl").string()), ConfigError);
  CHECK_THROWS_AS(FilterRuleSet::load((dir / "none.jsonl").string()), ConfigError);
}

TEST_CASE("review overrides") {
  const auto& rules = FilterRuleSet::defaults();
  SUBCASE("force_keep rescues a filtered question") {
    const auto out = apply_review_overrides({candidate("x", kB2, rules)}, OverrideList({kB2}, {}));
    CHECK(out[0].keep);
    CHECK(out[0].question.review_override == ReviewOverride::ForceKeep);
    CHECK(out[0].question.filter_trace == Ids{"R1", "R3"});
  }
  SUBCASE("force_drop removes a question, whether or not a rule matched") {
    const auto out = apply_review_overrides({candidate("x", kB1, rules), candidate("y", kTable1, rules)},
                                            OverrideList({}, {kB1, kTable1}));
    CHECK_FALSE(out[0].keep);
    CHECK_FALSE(out[1].keep);
    CHECK(out[1].question.review_override == ReviewOverride::ForceDrop);
    CHECK(out[1].question.filter_trace.empty());
  }
  SUBCASE("force_drop works even with R1 disabled") {
    const FilterRuleSet no_r1({rules.rules()[1], rules.rules()[2]});
    const auto c = candidate("x", kB1, no_r1);
    CHECK(c.keep);
    const auto out = apply_review_overrides({c}, OverrideList({}, {kB1}));
    CHECK_FALSE(out[0].keep);
  }
  SUBCASE("no overrides is the identity") {
    const std::vector<Candidate> in{candidate("x", kB1, rules), candidate("y", kTable1, rules)};
    const auto out = apply_review_overrides(in, OverrideList{});
    for (std::size_t i = 0; i < in.size(); ++i) {
      CHECK(out[i].keep == in[i].keep);
      CHECK(out[i].question == in[i].question);
    }
  }
  SUBCASE("keys are whitespace-normalized texts or ids") {
    const OverrideList o({"  What   is X? "}, {"doc-q2"});
    CHECK(o.lookup("a", "What is X?") == ReviewOverride::ForceKeep);
    CHECK(o.lookup("doc-q2", "Anything?") == ReviewOverride::ForceDrop);
    CHECK(o.lookup("a", "Anything?") == ReviewOverride::None);
  }
  SUBCASE("overlap is a configuration error") {
    CHECK_THROWS_AS(OverrideList({"A?"}, {" A? "}), ConfigError);
  }
  SUBCASE("shipped example file drops the B.1 question") {
    const auto o = OverrideList::load((app::default_resource_dir() / "overrides.example.json").string());
    CHECK(o.lookup("", kB1) == ReviewOverride::ForceDrop);
  }
}

TEST_CASE("match_category") {
  const CategorySet cats(fixture::labels29());
  CHECK(match_category("Cardiology", cats).label.name == "Cardiology");
  CHECK(match_category("  dental ", cats).label.name == "Dental");
  CHECK(match_category("\"Genetics.\"", cats).label.name == "Genetics");
  CHECK(match_category("Astrophysics", cats).label.name == "Other");
  CHECK_FALSE(match_category("Astrophysics", cats).ambiguous);
  CHECK(match_category("The best fit is Neurology.", cats).label.name == "Neurology");
  CHECK(match_category("Community Medicine", cats).label.name == "Community Medicine");
  CHECK(match_category("I'd say Community Medicine here", cats).label.name == "Community Medicine");
  const auto amb = match_category("Either Cardiology or Surgery", cats);
  CHECK(amb.ambiguous);
  CHECK(amb.label.name == "Other");
  CHECK(amb.mentioned == Ids{"Cardiology", "Surgery"});
}

TEST_CASE("parse_question_list") {
  CHECK(parse_question_list("1. Q1?\n2. Q2?") == Ids{"Q1?", "Q2?"});
  CHECK(parse_question_list("- Describe X.\n* Why  Y?\nNot a question\nQ1?\nq1?") ==
        Ids{"Describe X.", "Why Y?", "Q1?"});
  CHECK(parse_question_list("Here you go:\n1) What is A?") == Ids{"What is A?"});
  CHECK_THROWS_AS(parse_question_list("none here"), ParseError);
}

TEST_CASE("generate_questions") {
  llm::MockBackend m("author", {fixture::rule_regex("Title: CL report", {"1. Q1?\n2. Q2?"})});
  CHECK(generate_questions({"d", "CL report", "Body."}, m) == Ids{"Q1?", "Q2?"});
  CHECK_THROWS_AS(generate_questions({"d", "CL report", "  "}, m), PreconditionError);
  CHECK_THROWS_AS(generate_questions({"d", "CL report", "Body."}, m, PromptTemplate("{body} only")), ConfigError);
  llm::MockBackend junk("author", {}, std::string("no list"));
  CHECK_THROWS_AS(generate_questions({"d", "T", "Body."}, junk), ParseError);
}

TEST_CASE("categorize") {
  const CategorySet cats(fixture::labels29());
  llm::MockBackend m("cat", {fixture::rule_contains("heart", {"Cardiology"}), fixture::rule_contains("stars", {"Astrophysics"})});
  CHECK(categorize("Why does the heart beat?", m, cats).match.label.name == "Cardiology");
  const auto other = categorize("How do stars form?", m, cats);
  CHECK(other.match.label.name == "Other");
  CHECK(other.reply == "Astrophysics");
  CHECK_THROWS_AS(categorize("unmatched", m, cats), llm::BackendError);
  llm::MockBackend listing("cat", {fixture::rule_contains("- Public Health\n- Radiology", {"Radiology"})});
  CHECK(categorize("x?", listing, cats).match.label.name == "Radiology");
}

TEST_CASE("build_dataset") {
  const CategorySet cats(fixture::labels29());
  const std::vector<SourceDocument> corpus{{"d1", "One", "Body one."}, {"d2", "Two", "Body two."}};
  llm::MockBackend gen("gen", {fixture::rule_contains("Title: One", {"1. What is A?\n2. What did the study show?\n3. What is B?"}),
                               fixture::rule_contains("Title: Two", {"1. What is C?\n2. What is D?\n3. What is E?"})});
  llm::MockBackend cat("cat", {fixture::rule_contains("Question: What is D?", {"Cardiology or Surgery"}),
                               fixture::rule_contains("Question: What is E?", {"Genetics"})},
                       std::string("Cardiology"));

  SUBCASE("two documents, one filtered question") {
    llm::MockBackend simple_cat("cat", {}, std::string("Cardiology"));
    const auto res = build_dataset(corpus, gen, simple_cat, FilterRuleSet::defaults(), {}, cats);
    CHECK(res.questions.size() == 5);
    CHECK(res.report.n_candidates == 6);
    CHECK(res.report.n_filter_dropped == 1);
    CHECK(res.report.per_rule == std::map<std::string, std::size_t>{{"R1", 1}});
    CHECK(res.report.n_kept == 5);
    CHECK(res.questions[0].question_id == "d1-q1");
    CHECK(res.questions[1].question_id == "d1-q3");
    for (const auto& q : res.questions) CHECK(validate_question(q, cats).empty());
  }
  SUBCASE("ambiguity, categories and report recount") {
    const auto res = build_dataset(corpus, gen, cat, FilterRuleSet::defaults(), {}, cats);
    CHECK(res.report.n_ambiguous == 1);
    CHECK(res.questions.size() == 4);
    CHECK(res.report.per_category == std::map<std::string, std::size_t>{{"Cardiology", 3}, {"Genetics", 1}});

    std::map<std::string, std::size_t> outcomes;
    for (const auto& d : res.report.decisions) ++outcomes[std::string(to_string(d.outcome))];
    CHECK(outcomes["kept"] == res.report.n_kept);
    CHECK(outcomes["dropped_filter"] == 1);
    CHECK(outcomes["dropped_ambiguous"] == res.report.n_ambiguous);
    CHECK(res.report.decisions.size() == res.report.n_candidates);

    const auto j = to_json(res.report);
    CHECK(j["n_kept"] == 4);
    CHECK(j["decisions"].size() == 6);
  }
  SUBCASE("force_keep records provenance on the kept question") {
    const auto res = build_dataset(corpus, gen, cat, FilterRuleSet::defaults(),
                                   OverrideList({"What did the study show?"}, {}), cats);
    CHECK(res.questions.size() == 5);
    CHECK(res.questions[1].review_override == ReviewOverride::ForceKeep);
    CHECK(res.questions[1].filter_trace == Ids{"R1"});
    CHECK(res.report.n_force_keep == 1);
  }
  SUBCASE("failing documents are isolated") {
    const std::vector<SourceDocument> bad{{"d1", "One", "Body one."}, {"d3", "Three", "Body."}, {"d4", "Four", " "}};
    const auto res = build_dataset(bad, gen, cat, FilterRuleSet::defaults(), {}, cats);
    CHECK(res.questions.size() == 2);
    CHECK(res.report.n_documents == 3);
    CHECK(res.report.n_documents_failed == 2);
    REQUIRE(res.report.failures.size() == 2);
    CHECK(res.report.failures[0].id == "d3");
  }
  SUBCASE("empty corpus") {
    const auto res = build_dataset({}, gen, cat, FilterRuleSet::defaults(), {}, cats);
    CHECK(res.questions.empty());
    CHECK(res.report.n_candidates == 0);
    CHECK(res.report.n_kept == 0);
  }
  SUBCASE("duplicate doc ids are rejected") {
    const std::vector<SourceDocument> dup{{"d1", "One", "x."}, {"d1", "One", "y."}};
    CHECK_THROWS_AS(build_dataset(dup, gen, cat, FilterRuleSet::defaults(), {}, cats), PreconditionError);
  }
  SUBCASE("worker count does not change the output") {
    std::vector<SourceDocument> many;
    std::vector<llm::MockRule> rules;
    for (int i = 0; i < 12; ++i) {
      many.push_back({"doc" + std::to_string(i), "T" + std::to_string(i) + ".", "Body."});
      rules.push_back(fixture::rule_contains("Title: T" + std::to_string(i) + ".",
                                             {"1. Q" + std::to_string(i) + "a?\n2. Q" + std::to_string(i) + "b was used?"}));
    }
    llm::MockBackend g("gen", rules);
    BuildOptions one, four;
    four.workers = 4;
    const auto a = build_dataset(many, g, cat, FilterRuleSet::defaults(), {}, cats, one);
    const auto b = build_dataset(many, g, cat, FilterRuleSet::defaults(), {}, cats, four);
    CHECK(a.questions == b.questions);
    CHECK(to_json(a.report) == to_json(b.report));
    CHECK(a.questions.size() == 12);
  }
}
