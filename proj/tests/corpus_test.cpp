#include <gtest/gtest.h>

#include <algorithm>

#include "icq/corpus.hpp"
#include "icq/error.hpp"
#include "icq/fixtures.hpp"
#include "icq/util.hpp"
#include "test_support.hpp"

namespace icq {
namespace {

using testing::TempDir;

const char* kSnliLine =
    R"({"id":"e1","premise":"A swimmer playing in the surf watches a low flying airplane headed inland.","hypothesis":"Someone is swimming in the sea.","label":"entailment"})";

TEST(ParseSplit, ClsRecord) {
  const auto rows = parse_split(kSnliLine, TaskKind::kCls, "train.jsonl");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].id, "e1");
  EXPECT_EQ(rows[0].hypothesis, "Someone is swimming in the sea.");
  EXPECT_EQ(rows[0].label, "entailment");
  EXPECT_FALSE(rows[0].question_id);
}

TEST(ParseSplit, EmptyFileHasNoInstances) {
  try {
    parse_split("", TaskKind::kCls, "train.jsonl");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no instances"), std::string::npos);
  }
}

TEST(ParseSplit, BadJsonReportsLine) {
  std::string text;
  for (int i = 0; i < 6; ++i) {
    text += R"({"id":"r)" + std::to_string(i) + R"(","premise":"p","hypothesis":"h","label":"A"})" + "\n";
  }
  text += "{not json\n";
  try {
    parse_split(text, TaskKind::kCls, "train.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
    EXPECT_EQ(e.source(), "train.jsonl");
  }
}

TEST(ParseSplit, DuplicateId) {
  const std::string line = R"({"id":"x","premise":"p","hypothesis":"h","label":"A"})";
  EXPECT_THROW(parse_split(line + "\n" + line, TaskKind::kCls, "t"), ParseError);
}

TEST(ParseSplit, MissingField) {
  EXPECT_THROW(parse_split(R"({"id":"x","premise":"p","label":"A"})", TaskKind::kCls, "t"), ParseError);
}

TEST(ParseSplit, McqAnswerOutOfRange) {
  try {
    parse_split(R"({"id":"q","context":"c","choices":["a","b","c"],"answer":5})", TaskKind::kMcq, "t");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("answer index out of range"), std::string::npos);
  }
}

TEST(SplitMcq, RocStoryExample) {
  McqRecord q{"roc1", "Rick grew up in a troubled household.", {"He joined a gang.", "He is happy now."}, 1};
  const auto rows = split_mcq(q);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].id, "roc1#0");
  EXPECT_EQ(rows[0].premise, q.context);
  EXPECT_EQ(rows[0].hypothesis, "He joined a gang.");
  EXPECT_EQ(rows[0].label, "false");
  EXPECT_EQ(rows[1].hypothesis, "He is happy now.");
  EXPECT_EQ(rows[1].label, "true");
  EXPECT_EQ(rows[1].question_id, "roc1");
  EXPECT_EQ(rows[1].choice_index, 1u);
}

TEST(SplitMcq, IdenticalChoicesAllowed) {
  const auto rows = split_mcq(McqRecord{"q", "c", {"same", "same"}, 0});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].label, "true");
  EXPECT_EQ(rows[1].label, "false");
}

TEST(SplitMcq, FewerThanTwoChoices) { EXPECT_THROW(split_mcq(McqRecord{"q", "c", {"only"}, 0}), ValidationError); }

TEST(SplitMcq, RandomizedQuestionsHaveExactlyOneTrue) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& q : fixtures::random_mcq_records(25, 2, 5, seed)) {
      const auto rows = split_mcq(q);
      ASSERT_EQ(rows.size(), q.choices.size());
      EXPECT_EQ(std::count_if(rows.begin(), rows.end(), [](const Instance& i) { return i.label == "true"; }), 1);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].id, q.id + "#" + std::to_string(i));
        EXPECT_EQ(rows[i].label == "true", static_cast<std::int64_t>(i) == q.answer);
      }
    }
  }
}

TEST(Dataset, InfersSortedLabelSet) {
  Dataset ds("d", TaskKind::kCls,
             {testing::cls("a", "p", "h", "neutral"), testing::cls("b", "p", "h", "contradiction"),
              testing::cls("c", "p", "h", "entailment")},
             {testing::cls("t", "p", "h", "neutral")});
  EXPECT_EQ(ds.label_set(), (std::vector<std::string>{"contradiction", "entailment", "neutral"}));
  EXPECT_EQ(ds.gold(Split::kTest, 0), 2u);
  EXPECT_EQ(ds.row_of(Split::kTrain, "b"), 1u);
}

TEST(Dataset, TestLabelMustAppearInTrain) {
  EXPECT_THROW(Dataset("d", TaskKind::kCls, {testing::cls("a", "p", "h", "A")}, {testing::cls("t", "p", "h", "B")}),
               ValidationError);
}

TEST(Dataset, McqCountsMatchQuestions) {
  std::vector<Instance> train, test;
  std::size_t expected = 0;
  const auto questions = fixtures::random_mcq_records(40, 2, 5, 9);
  for (const auto& q : questions) {
    expected += q.choices.size();
    for (auto& i : split_mcq(q)) train.push_back(i);
  }
  for (auto& i : split_mcq(questions[0])) test.push_back(i);
  Dataset ds("m", TaskKind::kMcq, train, test);
  EXPECT_EQ(ds.train().size(), expected);
  EXPECT_EQ(std::count_if(ds.train().begin(), ds.train().end(), [](const Instance& i) { return i.label == "true"; }),
            static_cast<std::ptrdiff_t>(questions.size()));
  EXPECT_EQ(ds.label_set(), (std::vector<std::string>{"false", "true"}));
}

TEST(Dataset, McqGroupNeedsExactlyOneTrue) {
  auto rows = split_mcq(McqRecord{"q", "c", {"a", "b"}, 0});
  rows[1].label = "true";
  EXPECT_THROW(Dataset("m", TaskKind::kMcq, rows, split_mcq(McqRecord{"s", "c", {"a", "b"}, 0})), ValidationError);
}

TEST(Serialize, ClsRoundTrip) {
  const auto g = fixtures::generate(fixtures::PlantSpec{});
  const auto& ds = g.dataset;
  const auto again = parse_dataset(ds.name(), TaskKind::kCls, serialize_split(ds.train(), TaskKind::kCls),
                                   serialize_split(ds.test(), TaskKind::kCls));
  EXPECT_EQ(again.train(), ds.train());
  EXPECT_EQ(again.test(), ds.test());
}

TEST(Serialize, McqRoundTripThroughDirectory) {
  fixtures::PlantSpec spec;
  spec.task_kind = TaskKind::kMcq;
  spec.choices = 4;
  spec.n_train = 50;
  spec.n_test = 20;
  const auto g = fixtures::generate(spec);
  TempDir tmp;
  write_dataset(g.dataset, tmp.path());
  const auto loaded = load_dataset(tmp.path());
  EXPECT_EQ(loaded.task_kind(), TaskKind::kMcq);
  EXPECT_EQ(loaded.name(), g.dataset.name());
  EXPECT_EQ(loaded.train(), g.dataset.train());
  EXPECT_EQ(loaded.test(), g.dataset.test());
}

TEST(LoadDataset, MissingTestFileIsNamed) {
  TempDir tmp;
  write_file_atomic(tmp / "meta.json", R"({"task_kind":"CLS"})");
  write_file_atomic(tmp / "train.jsonl", kSnliLine);
  try {
    load_dataset(tmp.path());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("test.jsonl"), std::string::npos);
  }
}

TEST(LoadDataset, NameDefaultsToDirectory) {
  TempDir tmp;
  const auto dir = tmp / "snli-mini";
  write_file_atomic(dir / "meta.json", R"({"task_kind":"CLS"})");
  write_file_atomic(dir / "train.jsonl", kSnliLine);
  write_file_atomic(dir / "test.jsonl", kSnliLine);
  EXPECT_EQ(load_dataset(dir).name(), "snli-mini");
}

TEST(ContentHash, DependsOnKindAndBytes) {
  const auto a = dataset_content_hash(TaskKind::kCls, "x", "y");
  EXPECT_EQ(a, dataset_content_hash(TaskKind::kCls, "x", "y"));
  EXPECT_NE(a, dataset_content_hash(TaskKind::kMcq, "x", "y"));
  EXPECT_NE(a, dataset_content_hash(TaskKind::kCls, "xy", ""));
  EXPECT_EQ(a.size(), 64u);
}

TEST(StripPremises, TestOnlyByDefault) {
  Dataset ds("d", TaskKind::kCls, {testing::cls("a", "premise", "h", "A")}, {testing::cls("t", "premise", "h", "A")});
  const auto s = strip_premises(ds);
  EXPECT_EQ(s.test()[0].premise, "");
  EXPECT_EQ(s.train()[0].premise, "premise");
  EXPECT_EQ(s.test()[0].hypothesis, "h");
  EXPECT_EQ(s.test()[0].label, "A");
  const auto both = strip_premises(ds, StripScope::kTrainAndTest);
  EXPECT_EQ(both.train()[0].premise, "");
}

TEST(StripPremises, IdempotentAndKeepsMcqGrouping) {
  const auto q = McqRecord{"q", "Rick grew up in a troubled household.", {"a", "b", "c"}, 2};
  Dataset ds("m", TaskKind::kMcq, split_mcq(q), split_mcq(q));
  const auto once = strip_premises(ds);
  const auto twice = strip_premises(once);
  EXPECT_EQ(once.test(), twice.test());
  for (const auto& i : once.test()) {
    EXPECT_EQ(i.premise, "");
    EXPECT_EQ(i.question_id, "q");
  }
  const auto text = serialize_split(once.test(), TaskKind::kMcq);
  EXPECT_EQ(text, R"({"id":"q","context":"","choices":["a","b","c"],"answer":2})" "\n");
}

}  // namespace
}  // namespace icq
