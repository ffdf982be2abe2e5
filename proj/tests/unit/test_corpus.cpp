#include <gtest/gtest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "acecode/subprocess.hpp"
#include "acecode/task_corpus.hpp"
#include "test_support.hpp"

using namespace acecode;
using acecode::testing::FakeHarness;

namespace {

std::string record(const std::string& id, int refs = 1) {
  nlohmann::json j;
  j["id"] = id;
  j["description"] = "describe " + id;
  j["tests"] = {"assert f() == 1"};
  std::vector<std::string> r;
  for (int i = 0; i < refs; ++i) r.push_back("def f():\n    return 1  # " + std::to_string(i));
  j["references"] = r;
  return j.dump();
}

std::string corpus_text(int n) {
  std::string text;
  for (int i = 0; i < n; ++i) text += record("task" + std::to_string(i)) + "\n";
  return text;
}

CodingTask task_with_refs(std::size_t n) {
  CodingTask t;
  t.id = "t";
  t.description = "d";
  t.tests = {TestCase{"assert 1"}};
  for (std::size_t i = 0; i < n; ++i) t.references.push_back(Solution{"ref" + std::to_string(i)});
  return t;
}

std::int64_t ms(double v) { return static_cast<std::int64_t>(v * 1e6); }

}  // namespace

TEST(CorpusLoad, AllSplitKeepsEveryTaskInFileOrder) {
  const auto c = parse_corpus(corpus_text(10));
  ASSERT_EQ(c.tasks.size(), 10U);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(c.tasks[i].id, "task" + std::to_string(i));
}

TEST(CorpusLoad, SeededSplitIsDisjointAndExhaustive) {
  const auto text = corpus_text(10);
  const auto train = parse_corpus(text, Split::Train, 7);
  const auto test = parse_corpus(text, Split::Test, 7);
  EXPECT_EQ(train.tasks.size(), 8U);
  EXPECT_EQ(test.tasks.size(), 2U);
  std::set<std::string> ids;
  for (const auto& t : train.tasks) ids.insert(t.id);
  for (const auto& t : test.tasks) EXPECT_FALSE(ids.contains(t.id));
  for (const auto& t : test.tasks) ids.insert(t.id);
  EXPECT_EQ(ids.size(), 10U);
}

TEST(CorpusLoad, SplitSizesUseFloorForEveryN) {
  for (std::size_t n = 1; n <= 60; ++n) {
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
      const auto train = split_indices(n, Split::Train, seed);
      const auto test = split_indices(n, Split::Test, seed);
      EXPECT_EQ(train.size(), n * 8 / 10);
      std::vector<std::size_t> all(train);
      all.insert(all.end(), test.begin(), test.end());
      std::sort(all.begin(), all.end());
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
    }
  }
}

TEST(CorpusLoad, SplitDependsOnSeed) {
  EXPECT_NE(split_indices(50, Split::Test, 1), split_indices(50, Split::Test, 2));
  EXPECT_EQ(split_indices(50, Split::Test, 3), split_indices(50, Split::Test, 3));
}

TEST(CorpusLoad, MissingTestsIsMalformed) {
  nlohmann::json j = nlohmann::json::parse(record("x"));
  j.erase("tests");
  try {
    parse_corpus(j.dump());
    FAIL();
  } catch (const MalformedRecord& e) {
    EXPECT_EQ(e.field(), "tests");
    EXPECT_EQ(e.line(), 1U);
  }
}

TEST(CorpusLoad, RejectsSchemaViolations) {
  auto mutate = [](auto fn) {
    auto j = nlohmann::json::parse(record("x"));
    fn(j);
    return j.dump();
  };
  EXPECT_THROW(parse_corpus(mutate([](auto& j) { j["tests"] = nlohmann::json::array(); })), MalformedRecord);
  EXPECT_THROW(parse_corpus(mutate([](auto& j) { j["references"] = nlohmann::json::array(); })), MalformedRecord);
  EXPECT_THROW(parse_corpus(mutate([](auto& j) { j["surprise"] = 1; })), MalformedRecord);
  EXPECT_THROW(parse_corpus(mutate([](auto& j) { j["id"] = 5; })), MalformedRecord);
  EXPECT_THROW(parse_corpus(mutate([](auto& j) { j["example_code"] = "x"; })), MalformedRecord);
  EXPECT_THROW(parse_corpus("{not json\n"), MalformedRecord);
  EXPECT_THROW(parse_corpus(record("x", 16)), MalformedRecord);
  EXPECT_NO_THROW(parse_corpus(record("x", 15)));
}

TEST(CorpusLoad, DuplicateIdsAndEmptyCorpus) {
  EXPECT_THROW(parse_corpus(record("a") + "\n" + record("a") + "\n"), DuplicateTaskId);
  EXPECT_THROW(parse_corpus("\n\n"), EmptyCorpus);
}

TEST(CorpusLoad, RoundTripPreservesEverything) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Corpus c;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      auto t = task_with_refs(1 + rng() % 4);
      t.id = "id\"" + std::to_string(i) + "\né";
      t.description = std::string(rng() % 30, 'x') + "\t\"";
      if (rng() % 2) t.example_pair = ExamplePair{"ei" + std::to_string(i), "ec\n"};
      if (rng() % 2) {
        t.cached_reference = CachedReference{
            rng() % t.references.size(),
            RuntimeStats::from_repetitions({std::chrono::nanoseconds(100 + rng() % 50), std::chrono::nanoseconds(120)}),
            "host"};
      }
      if (rng() % 3 == 0) t.selection_error = "nothing passed";
      c.tasks.push_back(t);
    }
    std::string text;
    for (const auto& t : c.tasks) text += to_record(t) + "\n";
    const auto loaded = parse_corpus(text);
    std::string again;
    for (const auto& t : loaded.tasks) again += to_record(t) + "\n";
    EXPECT_EQ(again, text);
    EXPECT_EQ(parse_corpus(again), loaded);
    for (std::size_t i = 0; i < c.tasks.size(); ++i) {
      EXPECT_EQ(loaded.tasks[i].id, c.tasks[i].id);
      EXPECT_EQ(loaded.tasks[i].description, c.tasks[i].description);
      EXPECT_EQ(loaded.tasks[i].cached_reference, c.tasks[i].cached_reference);
      EXPECT_EQ(loaded.tasks[i].example_pair, c.tasks[i].example_pair);
    }
  }
}

TEST(CorpusFile, WriteThenLoad) {
  TempDir dir;
  const auto path = dir.path() / "c.jsonl";
  const auto c = parse_corpus(corpus_text(4));
  write_corpus(path, c);
  EXPECT_EQ(load_corpus(path), c);
  EXPECT_THROW(load_corpus(dir.path() / "missing.jsonl"), Error);
}

TEST(SelectReference, PicksFastestMean) {
  FakeHarness h;
  auto t = task_with_refs(3);
  h.set("ref0", {Status::Pass, {ms(2.0)}});
  h.set("ref1", {Status::Pass, {ms(1.0)}});
  h.set("ref2", {Status::Pass, {ms(3.0)}});
  const auto choice = select_reference(t, h);
  EXPECT_EQ(choice.index, 1U);
  ASSERT_TRUE(choice.solution.measured);
  EXPECT_EQ(choice.solution.measured->mean.count(), 1e6);
}

TEST(SelectReference, TieGoesToLowestIndex) {
  FakeHarness h;
  auto t = task_with_refs(2);
  h.set("ref0", {Status::Pass, {ms(1.0)}});
  h.set("ref1", {Status::Pass, {ms(1.0)}});
  EXPECT_EQ(select_reference(t, h).index, 0U);
}

TEST(SelectReference, FailingReferencesAreSkippedAndNeverTimed) {
  FakeHarness h;
  auto t = task_with_refs(3);
  h.set("ref0", {Status::TestFailure});
  h.set("ref1", {Status::Pass, {ms(5.0)}});
  h.set("ref2", {Status::Timeout});
  EXPECT_EQ(select_reference(t, h).index, 1U);
  EXPECT_EQ(h.measured_codes, std::vector<std::string>{"ref1"});
}

TEST(SelectReference, NoValidReference) {
  FakeHarness h;
  auto t = task_with_refs(1);
  h.set("ref0", {Status::TestFailure});
  EXPECT_THROW(select_reference(t, h), NoValidReference);
}

TEST(SelectReference, ResultIsNoSlowerThanAnyValidReference) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    FakeHarness h;
    auto t = task_with_refs(1 + rng() % kMaxReferences);
    std::vector<double> means;
    for (std::size_t i = 0; i < t.references.size(); ++i) {
      const bool ok = i == 0 || rng() % 4 != 0;
      const std::int64_t a = 1 + rng() % 1000, b = 1 + rng() % 1000;
      h.set("ref" + std::to_string(i), {ok ? Status::Pass : Status::TestFailure, {a, b}});
      if (ok) means.push_back((static_cast<double>(a) + static_cast<double>(b)) / 2);
    }
    const auto choice = select_reference(t, h);
    for (double m : means) EXPECT_LE(choice.solution.measured->mean.count(), m);
  }
}

TEST(RenderPrompt, FollowsTemplateOrder) {
  auto t = task_with_refs(1);
  t.description = "D";
  t.example_pair = ExamplePair{"EI", "EC"};
  const auto text = render_prompt(t);
  const auto rules_at = text.find("You must follow the following rules:");
  const auto code_rule = text.find("The code should be in '''python\\n[Code]\\n''' block.");
  const auto ei = text.find("EI");
  const auto ec = text.find("EC", ei);
  const auto d = text.find("\nD\n", ec);
  ASSERT_NE(rules_at, std::string::npos);
  ASSERT_NE(code_rule, std::string::npos);
  EXPECT_EQ(text.rfind("### Instruction:", 0), 0U);
  for (const char* marker : {"Second", "Third", "Fourth", "Fifth", "Finally"}) {
    const auto at = text.find(marker);
    EXPECT_NE(at, std::string::npos) << marker;
    EXPECT_LT(at, ei) << marker;
  }
  EXPECT_LT(code_rule, ei);
  EXPECT_LT(ei, ec);
  EXPECT_NE(d, std::string::npos);
  EXPECT_NE(text.find("### Here is a example:\nEI\nEC\n### Task Description:\nD\n"), std::string::npos);
  EXPECT_EQ(render_prompt(t), text);
}

TEST(RenderPrompt, NeedsExamplePair) {
  EXPECT_THROW(render_prompt(task_with_refs(1)), MissingExamplePair);
}
