#include <gtest/gtest.h>

#include "icq/annotate.hpp"
#include "icq/error.hpp"
#include "icq/fixtures.hpp"
#include "test_support.hpp"

namespace icq {
namespace {

using testing::resources;

TokenizedInstance toks(std::string premise, std::string hypothesis) {
  return tokenize(Instance{"x", std::move(premise), std::move(hypothesis), "A", std::nullopt, std::nullopt});
}

TokenizedInstance hyp(std::string hypothesis) { return toks("", std::move(hypothesis)); }

bool has(const std::set<FeatureSpec>& s, FeatureKind k, const std::string& v) { return s.count(FeatureSpec{k, v}) != 0; }

TEST(Feature, ParseAndPrint) {
  EXPECT_EQ(parse_feature("WORD:no"), (FeatureSpec{FeatureKind::kWord, "no"}));
  EXPECT_EQ(parse_feature("WORD:No"), (FeatureSpec{FeatureKind::kWord, "no"}));
  EXPECT_EQ(parse_feature("NER:per"), (FeatureSpec{FeatureKind::kNer, "PER"}));
  EXPECT_EQ(parse_feature("NEGATION"), (FeatureSpec{FeatureKind::kNegation, "present"}));
  EXPECT_EQ(to_string(FeatureSpec{FeatureKind::kNegation, "present"}), "NEGATION");
  EXPECT_EQ(to_string(FeatureSpec{FeatureKind::kTense, "past"}), "TENSE:past");
  EXPECT_THROW(parse_feature("FOO:bar"), ValidationError);
  EXPECT_THROW(parse_feature("TENSE:sometime"), ValidationError);
  EXPECT_THROW(parse_feature("WORD"), ValidationError);
}

TEST(Resources, LoadAndHash) {
  const auto& r = resources();
  EXPECT_EQ(r.content_hash.size(), 64u);
  EXPECT_EQ(r.sentiment_lexicon.at("happy"), 1);
  EXPECT_TRUE(r.negation_words.count("n't"));
  EXPECT_TRUE(r.gazetteers.at("LOC").count("denver"));
  EXPECT_EQ(r.gazetteers.size(), 5u);
}

TEST(Resources, MissingFileIsAnError) {
  testing::TempDir tmp;
  EXPECT_THROW(ResourceBundle::load(tmp.path()), ValidationError);
}

TEST(Word, BothSidesForCls) {
  const auto t = toks("A swimmer playing in the surf.", "Someone is swimming in the sea.");
  const auto w = annotate_word(t, Scope::kBoth);
  EXPECT_TRUE(has(w, FeatureKind::kWord, "swimming"));
  EXPECT_TRUE(has(w, FeatureKind::kWord, "sea"));
  EXPECT_TRUE(has(w, FeatureKind::kWord, "swimmer"));
  EXPECT_FALSE(has(w, FeatureKind::kWord, "."));
}

TEST(Word, HypothesisOnlyScope) {
  const auto t = toks("He joined a gang.", "He is happy now.");
  EXPECT_FALSE(has(annotate_word(t, Scope::kHypothesisOnly), FeatureKind::kWord, "gang"));
  EXPECT_TRUE(annotate_word(toks("", ""), Scope::kBoth).empty());
}

TEST(Word, VocabularyFilter) {
  const Vocabulary v{"sea"};
  const auto w = annotate_word(hyp("Someone is swimming in the sea."), Scope::kBoth, &v);
  EXPECT_EQ(w, (std::set<FeatureSpec>{{FeatureKind::kWord, "sea"}}));
}

TEST(Sentiment, Examples) {
  const auto& r = resources();
  EXPECT_EQ(annotate_sentiment(hyp("He is happy now."), r, Scope::kBoth).value, "positive");
  EXPECT_EQ(annotate_sentiment(hyp("The table is near the window."), r, Scope::kBoth).value, "neutral");
  EXPECT_EQ(annotate_sentiment(hyp("He is happy and sad."), r, Scope::kBoth).value, "neutral");
  EXPECT_EQ(annotate_sentiment(hyp("He is sad."), r, Scope::kBoth).value, "negative");
}

TEST(Sentiment, FlippingPolaritiesSwapsLabels) {
  auto flipped = resources();
  for (auto& [w, p] : flipped.sentiment_lexicon) p = -p;
  const std::vector<std::string> texts{"He is happy now.", "A terrible, awful day.", "The door is open.",
                                       "Good and bad.", "I love this wonderful movie but hate the ending."};
  for (const auto& text : texts) {
    const auto a = annotate_sentiment(hyp(text), resources(), Scope::kBoth).value;
    const auto b = annotate_sentiment(hyp(text), flipped, Scope::kBoth).value;
    if (a == "neutral") {
      EXPECT_EQ(b, "neutral") << text;
    } else {
      EXPECT_NE(a, b) << text;
      EXPECT_NE(b, "neutral") << text;
    }
  }
}

TEST(Tense, Examples) {
  const auto& r = resources();
  EXPECT_EQ(annotate_tense(hyp("He will join a gang."), r, Scope::kBoth)->value, "future");
  EXPECT_EQ(annotate_tense(hyp("Rick grew up in a troubled household."), r, Scope::kBoth)->value, "past");
  EXPECT_FALSE(annotate_tense(hyp("The cat."), r, Scope::kBoth));
  EXPECT_EQ(annotate_tense(hyp("He is happy now."), r, Scope::kBoth)->value, "present");
  EXPECT_EQ(annotate_tense(hyp("She opened the door."), r, Scope::kBoth)->value, "past");
  EXPECT_EQ(annotate_tense(hyp("They'll not go."), r, Scope::kBoth)->value, "future");
  EXPECT_EQ(annotate_tense(hyp("A man is swimming."), r, Scope::kBoth)->value, "present");
}

TEST(Tense, NonVerbsAreNotVerbs) {
  EXPECT_FALSE(annotate_tense(hyp("The red bed in the morning."), resources(), Scope::kBoth));
}

TEST(Negation, Examples) {
  const auto& r = resources();
  EXPECT_TRUE(annotate_negation(hyp("He is n't happy."), r, Scope::kBoth));
  EXPECT_TRUE(annotate_negation(hyp("He isn't happy."), r, Scope::kBoth));
  EXPECT_FALSE(annotate_negation(hyp("He is happy now."), r, Scope::kBoth));
  EXPECT_TRUE(annotate_negation(hyp("Nothing happened."), r, Scope::kBoth));
  EXPECT_FALSE(annotate_negation(toks("Not here.", "Here."), r, Scope::kHypothesisOnly));
}

TEST(Overlap, Examples) {
  const auto& r = resources();
  EXPECT_FALSE(annotate_overlap(toks("A swimmer playing in the surf watches a low flying airplane headed inland.",
                                     "Someone is swimming in the sea."),
                                r));
  EXPECT_TRUE(annotate_overlap(toks("An airplane flies.", "The airplane is low."), r));
  EXPECT_FALSE(annotate_overlap(toks("", "The airplane is low."), r));
  EXPECT_FALSE(annotate_overlap(toks("He is in the house.", "She is in the car."), r));
}

TEST(Ner, Examples) {
  const auto& r = resources();
  EXPECT_EQ(annotate_ner(hyp("Denver is 5 miles away"), r, Scope::kBoth),
            (std::set<FeatureSpec>{{FeatureKind::kNer, "CARDINAL"}, {FeatureKind::kNer, "LOC"}}));
  EXPECT_TRUE(annotate_ner(hyp("the cat sat on the mat"), r, Scope::kBoth).empty());
  EXPECT_TRUE(has(annotate_ner(hyp("see you on monday"), r, Scope::kBoth), FeatureKind::kNer, "TIME"));
  EXPECT_TRUE(has(annotate_ner(hyp("She met Adam in Paris."), r, Scope::kBoth), FeatureKind::kNer, "PER"));
  EXPECT_TRUE(has(annotate_ner(hyp("She met Adam in Paris."), r, Scope::kBoth), FeatureKind::kNer, "LOC"));
  EXPECT_TRUE(has(annotate_ner(hyp("He has five dogs."), r, Scope::kBoth), FeatureKind::kNer, "CARDINAL"));
  // Lowercase gazetteer words are not names.
  EXPECT_FALSE(has(annotate_ner(hyp("we went to denver"), r, Scope::kBoth), FeatureKind::kNer, "LOC"));
}

TEST(Typo, Examples) {
  const auto& r = resources();
  EXPECT_TRUE(annotate_typo(hyp("He recieved a letter"), r, Scope::kBoth));
  EXPECT_FALSE(annotate_typo(hyp("He received a letter"), r, Scope::kBoth));
  EXPECT_FALSE(annotate_typo(hyp("Zorblax arrived"), r, Scope::kBoth));
  EXPECT_FALSE(annotate_typo(hyp("He isn't here."), r, Scope::kBoth));
}

TEST(AnnotateInstance, AtMostOneSentimentAndTense) {
  const auto set = annotate_instance(toks("He will win.", "She won and is happy."), resources(), Scope::kBoth, nullptr);
  int sentiment = 0, tense = 0;
  for (const auto& f : set.features) {
    sentiment += f.kind == FeatureKind::kSentiment;
    tense += f.kind == FeatureKind::kTense;
  }
  EXPECT_EQ(sentiment, 1);
  EXPECT_LE(tense, 1);
}

fixtures::Generated mcq_fixture() {
  fixtures::PlantSpec spec;
  spec.task_kind = TaskKind::kMcq;
  spec.choices = 3;
  spec.n_train = 60;
  spec.n_test = 20;
  return fixtures::generate(spec);
}

TEST(AnnotateAll, McqIgnoresPremisesExceptForOverlap) {
  const auto g = mcq_fixture();
  auto with_sentinel = [](std::vector<Instance> rows) {
    for (auto& i : rows) i.premise = "Never Denver 1999 Monday recieved tomorrow will happy sad no.";
    return rows;
  };
  const Dataset sentinel(g.dataset.name(), TaskKind::kMcq, with_sentinel(g.dataset.train()),
                         with_sentinel(g.dataset.test()));
  AnnotateConfig cfg;
  cfg.vocab_min_freq = 1;
  const auto a = annotate_all(g.dataset, resources(), cfg);
  const auto b = annotate_all(sentinel, resources(), cfg);
  auto drop_overlap = [](const std::vector<AnnotationSet>& v) {
    auto out = v;
    for (auto& s : out) std::erase_if(s.features, [](const FeatureSpec& f) { return f.kind == FeatureKind::kOverlap; });
    return out;
  };
  EXPECT_EQ(drop_overlap(a.train), drop_overlap(b.train));
  EXPECT_EQ(drop_overlap(a.test), drop_overlap(b.test));
}

TEST(AnnotateAll, DeterministicAcrossJobCounts) {
  const auto g = fixtures::generate(fixtures::PlantSpec{});
  AnnotateConfig one;
  one.jobs = 1;
  AnnotateConfig many;
  many.jobs = 4;
  EXPECT_EQ(annotate_all(g.dataset, resources(), one), annotate_all(g.dataset, resources(), many));
}

TEST(AnnotateAll, VocabularyThreshold) {
  const auto g = fixtures::generate(fixtures::PlantSpec{});
  const auto vocab = build_vocabulary(g.dataset, 5);
  EXPECT_TRUE(vocab.count("zork"));
  const auto strict = build_vocabulary(g.dataset, 100000);
  EXPECT_TRUE(strict.empty());
}

TEST(Sidecar, MergeAddsFeature) {
  const auto g = mcq_fixture();
  auto ann = annotate_all(g.dataset, resources());
  const auto id = g.dataset.test()[0].id;
  const auto sidecar = parse_sidecar(R"({"id":")" + id + R"(","features":[{"kind":"NEGATION","value":"present"}]})");
  apply_sidecar(ann, g.dataset, sidecar, SidecarMode::kMerge);
  EXPECT_TRUE(ann.test[0].contains(FeatureSpec{FeatureKind::kNegation, "present"}));
}

TEST(Sidecar, MergeReplacesSingleValuedKinds) {
  const auto g = mcq_fixture();
  auto ann = annotate_all(g.dataset, resources());
  const auto id = g.dataset.train()[0].id;
  apply_sidecar(ann, g.dataset,
                parse_sidecar(R"({"id":")" + id + R"(","features":[{"kind":"SENTIMENT","value":"negative"}]})"),
                SidecarMode::kMerge);
  int sentiments = 0;
  for (const auto& f : ann.train[0].features) sentiments += f.kind == FeatureKind::kSentiment;
  EXPECT_EQ(sentiments, 1);
  EXPECT_TRUE(ann.train[0].contains(FeatureSpec{FeatureKind::kSentiment, "negative"}));
}

TEST(Sidecar, ReplaceSubstitutesWholeSet) {
  const auto g = mcq_fixture();
  auto ann = annotate_all(g.dataset, resources());
  const auto id = g.dataset.train()[0].id;
  apply_sidecar(ann, g.dataset,
                parse_sidecar(R"({"id":")" + id + R"(","features":[{"kind":"NER","value":"PER"}]})"),
                SidecarMode::kReplace);
  EXPECT_EQ(ann.train[0].features, (std::set<FeatureSpec>{{FeatureKind::kNer, "PER"}}));
}

TEST(Sidecar, EmptyIsNoOp) {
  const auto g = mcq_fixture();
  const auto before = annotate_all(g.dataset, resources());
  auto after = before;
  apply_sidecar(after, g.dataset, parse_sidecar(""), SidecarMode::kMerge);
  EXPECT_EQ(before, after);
}

TEST(Sidecar, Errors) {
  const auto g = mcq_fixture();
  auto ann = annotate_all(g.dataset, resources());
  EXPECT_THROW(parse_sidecar(R"({"id":"q1#0","features":[{"kind":"FOO","value":"x"}]})"), ValidationError);
  EXPECT_THROW(parse_sidecar(R"({"id":"q1#0","features":[{"kind":"TENSE","value":"x"}]})"), ValidationError);
  try {
    apply_sidecar(ann, g.dataset, parse_sidecar(R"({"id":"nope#0","features":[]})"), SidecarMode::kMerge);
    FAIL();
  } catch (const IdListError& e) {
    EXPECT_EQ(e.ids(), std::vector<std::string>{"nope#0"});
  }
}

TEST(AnnotationCache, RoundTrip) {
  const auto g = fixtures::generate(fixtures::PlantSpec{});
  const auto ann = annotate_all(g.dataset, resources());
  EXPECT_EQ(parse_annotations(serialize_annotations(ann)), ann);
}

}  // namespace
}  // namespace icq
