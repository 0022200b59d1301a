#include <gtest/gtest.h>

#include "fatigue/errors.hpp"
#include "fatigue/harness.hpp"
#include "fatigue/sentiment.hpp"

using namespace fatigue;

using Tokens = std::vector<std::string>;

TEST(Tokenize, Basics) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("Too Bright!"), (Tokens{"too", "bright", "too bright"}));
  EXPECT_EQ(tokenize("  a,  b  c "), (Tokens{"a", "b", "c", "a b", "b c"}));
  EXPECT_TRUE(tokenize("?!...").empty());
}

TEST(Tokenize, IdempotentOnNormalizedWords) {
  for (const char* w : {"tired", "calm", "bright"}) {
    const auto once = tokenize(w);
    ASSERT_EQ(once.size(), 1u);
    EXPECT_EQ(tokenize(once[0]), once);
  }
}

TEST(Tokenize, UnicodeWhitespaceAndCase) {
  // no-break space and ideographic space both separate words
  EXPECT_EQ(tokenize("ÉCRAN\xC2\xA0Trop\xE3\x80\x80" "Clair"),
            (Tokens{"écran", "trop", "clair", "écran trop", "trop clair"}));
  EXPECT_EQ(tokenize("ΟΘΟΝΗ"), (Tokens{"οθονη"}));
}

TEST(Utterance, LengthLimit) {
  EXPECT_NO_THROW(UtteranceText(std::string(2000, 'a')));
  EXPECT_THROW(UtteranceText(std::string(2001, 'a')), ValidationError);
  std::string accents;
  for (int i = 0; i < 2000; ++i) accents += "é";
  EXPECT_EQ(count_code_points(accents), 2000u);
  EXPECT_NO_THROW(UtteranceText{accents});
}

TEST(Classify, EmptyAndZeroModelAreNeutral) {
  SentimentModel empty;
  const auto e = classify_sentiment(std::string_view(""), empty);
  EXPECT_EQ(e.score, 0.0);
  EXPECT_EQ(e.label, Sentiment::neutral);
  SentimentModel zero;
  zero.set_weight("bright", 0.0);
  EXPECT_EQ(classify_sentiment(std::string_view("too bright"), zero).label, Sentiment::neutral);
}

TEST(Classify, BandsAndTies) {
  EXPECT_EQ(label_for_score(0.1), Sentiment::neutral);
  EXPECT_EQ(label_for_score(-0.1), Sentiment::neutral);
  EXPECT_EQ(label_for_score(0.1000001), Sentiment::positive);
  EXPECT_EQ(label_for_score(-0.1000001), Sentiment::negative);
  SentimentModel m;
  m.set_weight("good", 0.5);
  const auto r = classify_sentiment(std::string_view("good"), m);
  EXPECT_DOUBLE_EQ(r.score, std::tanh(0.5));
  EXPECT_EQ(r.label, Sentiment::positive);
}

TEST(Classify, ZeroWeightTokenDoesNotChangeScore) {
  SentimentModel m;
  m.set_weight("bad", -0.7);
  m.set_weight("very", 0.0);
  m.set_weight("very bad", 0.0);
  EXPECT_EQ(classify_sentiment(std::string_view("bad"), m).score,
            classify_sentiment(std::string_view("very bad"), m).score);
}

TEST(Feature, Values) {
  EXPECT_EQ(sentiment_feature(Sentiment::positive), 1.0);
  EXPECT_EQ(sentiment_feature(Sentiment::neutral), 0.0);
  EXPECT_EQ(sentiment_feature(Sentiment::negative), -1.0);
}

TEST(Dataset, BundledSplitShape) {
  const auto ex = load_sentiment_csv(default_sentiment_data_path());
  ASSERT_EQ(ex.size(), 60u);
  std::array<int, 3> test_per_class{};
  std::size_t test = 0;
  for (const auto& e : ex)
    if (e.test) {
      ++test;
      ++test_per_class[static_cast<std::size_t>(e.label)];
    }
  EXPECT_EQ(test, 15u);
  EXPECT_EQ(test_per_class, (std::array<int, 3>{5, 5, 5}));
  EXPECT_THROW(parse_sentiment_csv("text,label\nhi,positive\n"), ValidationError);
  EXPECT_THROW(parse_sentiment_csv("text,label,split\nhi,great,train\n"), ValidationError);
}

TEST(SentimentTraining, HeldOutAccuracyOnBundledSet) {
  const auto ex = load_sentiment_csv(default_sentiment_data_path());
  std::vector<SentimentExample> train, test;
  for (const auto& e : ex) (e.test ? test : train).push_back(e);
  Rng rng = Rng(1).split(7);
  const auto model = train_sentiment(train, SentimentHyper{}, rng);
  // exhaustive evaluation over the test split
  std::size_t correct = 0;
  for (const auto& e : test) correct += classify_sentiment(std::string_view(e.text), model).label == e.label;
  EXPECT_GE(static_cast<double>(correct) / test.size(), 0.8);
  EXPECT_DOUBLE_EQ(sentiment_accuracy(model, test), static_cast<double>(correct) / test.size());
}

TEST(SentimentPersistence, JsonRoundTrip) {
  SentimentModel m;
  m.set_weight("calm", 0.25);
  m.set_weight("too bright", -1.5);
  const auto back = sentiment_from_json(sentiment_to_json(m));
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_THROW(sentiment_from_json("{\"weights\": 3}"), ValidationError);
}
