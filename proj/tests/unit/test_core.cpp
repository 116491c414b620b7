#include <doctest.h>

#include <atomic>
#include <fstream>
#include <set>

#include "support/fixtures.hpp"
#include "dahl/core/categories.hpp"
#include "dahl/core/errors.hpp"
#include "dahl/core/parallel.hpp"
#include "dahl/core/prompt.hpp"
#include "dahl/core/text.hpp"
#include "dahl/core/types.hpp"

using namespace dahl;

TEST_CASE("text helpers") {
  CHECK(text::trim("  a b \n") == "a b");
  CHECK(text::trim("   ").empty());
  CHECK(text::collapse_whitespace(" a \t\n b  c ") == "a b c");
  CHECK(text::to_lower("MiXeD 42") == "mixed 42");
  CHECK(text::split_lines("a\r\nb\n\nc") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(text::utf8_length("na\xC3\xAFve") == 5);
  CHECK(text::ascii_quotes("I\xE2\x80\x99m \xE2\x80\x9Cok\xE2\x80\x9D") == "I'm \"ok\"");
  CHECK(text::bounded_match_at("i don't know.", "i don't know", 0));
  CHECK_FALSE(text::bounded_match_at("xi don't know", "i don't know", 1));
  CHECK_FALSE(text::bounded_match_at("no answers", "no answer", 0));
}

TEST_CASE("read_list_file skips comments and blanks") {
  fixture::TempDir dir;
  std::ofstream(dir / "list.txt") << "# header\n alpha \n\n#skip\nbeta\n";
  CHECK(text::read_list_file((dir / "list.txt").string()) == std::vector<std::string>{"alpha", "beta"});
  CHECK_THROWS_AS(text::read_list_file((dir / "missing.txt").string()), IoError);
}

TEST_CASE("enum string round trips") {
  for (auto v : {Verdict::True, Verdict::False, Verdict::Unknown}) CHECK(parse_verdict(to_string(v)) == v);
  for (auto o : {ReviewOverride::None, ReviewOverride::ForceKeep, ReviewOverride::ForceDrop}) {
    CHECK(parse_review_override(to_string(o)) == o);
  }
  for (auto f : {FinishReason::Stop, FinishReason::Length, FinishReason::Other}) {
    CHECK(parse_finish_reason(to_string(f)) == f);
  }
  for (auto s : {RecordStatus::Pending, RecordStatus::Preprocessed, RecordStatus::Split, RecordStatus::Checked,
                 RecordStatus::Scored, RecordStatus::ExcludedNoncommittal, RecordStatus::ExcludedUnknown,
                 RecordStatus::ExcludedMismatch, RecordStatus::Failed}) {
    CHECK(parse_record_status(to_string(s)) == s);
  }
  CHECK(to_string(RecordStatus::ExcludedNoncommittal) == "excluded_noncommittal");
  CHECK_FALSE(parse_verdict("True"));
  CHECK_FALSE(parse_record_status("done"));
}

TEST_CASE("status transitions are monotone") {
  using S = RecordStatus;
  CHECK(can_transition(S::Pending, S::Preprocessed));
  CHECK(can_transition(S::Split, S::Checked));
  CHECK(can_transition(S::Checked, S::Scored));
  CHECK(can_transition(S::Preprocessed, S::ExcludedNoncommittal));
  CHECK(can_transition(S::Pending, S::Failed));
  CHECK_FALSE(can_transition(S::Split, S::Preprocessed));
  CHECK_FALSE(can_transition(S::Checked, S::Checked));
  for (auto t : {S::Pending, S::Split, S::Scored, S::Failed}) {
    CHECK_FALSE(can_transition(S::Scored, t));
    CHECK_FALSE(can_transition(S::Failed, t));
    CHECK_FALSE(can_transition(S::ExcludedUnknown, t));
  }
  CHECK(is_terminal(S::Scored));
  CHECK_FALSE(is_terminal(S::Checked));
}

TEST_CASE("GenConfig validation") {
  CHECK(validate(GenConfig{}).empty());
  CHECK(GenConfig{}.temperature == 0.6);
  CHECK(GenConfig{}.max_tokens == 256);
  CHECK(validate(GenConfig{2.0, 1, std::nullopt}).empty());
  CHECK_FALSE(validate(GenConfig{-0.1, 10, std::nullopt}).empty());
  CHECK_FALSE(validate(GenConfig{2.5, 10, std::nullopt}).empty());
  CHECK_FALSE(validate(GenConfig{0.5, 0, std::nullopt}).empty());
}

TEST_CASE("CategorySet") {
  const CategorySet set(fixture::labels29());
  CHECK(set.size() == 29);
  CHECK(set.fallback().name == "Other");
  CHECK(set.find("  cardiology ")->name == "Cardiology");
  CHECK(set.find("o&g")->name == "O&G");
  CHECK_FALSE(set.find("Cardio"));
  CHECK(set.contains(CategoryLabel{"Public Health"}));
  CHECK_FALSE(set.contains(CategoryLabel{"public health"}));
  CHECK_THROWS_AS(CategorySet({"A", "a", "Other"}), ConfigError);
  CHECK_THROWS_AS(CategorySet({"A", "B"}), ConfigError);
  CHECK_THROWS_AS(CategorySet({"A", " ", "Other"}), ConfigError);

  const auto shipped = CategorySet::load((app::default_resource_dir() / "categories.txt").string());
  CHECK(shipped.labels() == fixture::labels29());
}

TEST_CASE("PromptTemplate") {
  const PromptTemplate t("Q: {question}\nKeep {unknown} and {{question}}.");
  CHECK(t.has_placeholder("question"));
  CHECK_FALSE(t.has_placeholder("answer"));
  CHECK(t.render({{"question", "a {question} b"}}) == "Q: a {question} b\nKeep {unknown} and {a {question} b}.");
  CHECK_NOTHROW(t.require({"question"}));
  CHECK_THROWS_AS(t.require({"question", "answer"}), ConfigError);
  CHECK(PromptTemplate("no placeholders").render({{"x", "y"}}) == "no placeholders");
}

TEST_CASE("parallel_for") {
  for (std::size_t workers : {1u, 3u, 8u}) {
    std::vector<int> out(100, 0);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  }
  std::atomic<int> ran{0};
  CHECK_THROWS_AS(parallel_for(20, 4,
                               [&](std::size_t i) {
                                 ++ran;
                                 if (i == 5) throw IoError("boom");
                               }),
                  IoError);
  CHECK(ran == 20);
}
