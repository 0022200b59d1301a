#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fatigue/rng.hpp"

namespace fatigue {

enum class Sentiment { negative, neutral, positive };

std::string_view to_string(Sentiment s) noexcept;
Sentiment parse_sentiment(std::string_view s);

inline constexpr double kNeutralBand = 0.1;
inline constexpr std::size_t kMaxUtteranceCodePoints = 2000;

// Short feedback text; at most 2000 code points of UTF-8.
class UtteranceText {
 public:
  // Throws ValidationError when the text is too long.
  explicit UtteranceText(std::string text);
  const std::string& str() const noexcept { return text_; }

 private:
  std::string text_;
};

std::size_t count_code_points(std::string_view utf8) noexcept;

struct SentimentLabel {
  Sentiment label = Sentiment::neutral;
  double score = 0.0;  // [-1, 1]
};

// Lowercased unigrams split on Unicode whitespace with punctuation removed,
// followed by every adjacent bigram ("a b").
std::vector<std::string> tokenize(std::string_view text);

// Linear bag-of-n-grams scorer: score = tanh(sum of token weights). No bias,
// so empty text and unknown tokens score 0.
class SentimentModel {
 public:
  double raw_score(std::string_view text) const;
  double weight(const std::string& token) const;
  void set_weight(const std::string& token, double w) { weights_[token] = w; }
  std::map<std::string, double>& weights() noexcept { return weights_; }
  const std::map<std::string, double>& weights() const noexcept { return weights_; }

 private:
  std::map<std::string, double> weights_;
};

// score > band -> positive, score < -band -> negative, otherwise neutral.
Sentiment label_for_score(double score, double band = kNeutralBand) noexcept;
SentimentLabel classify_sentiment(const UtteranceText& text, const SentimentModel& model);
SentimentLabel classify_sentiment(std::string_view text, const SentimentModel& model);

// positive -> +1, neutral -> 0, negative -> -1
double sentiment_feature(Sentiment s) noexcept;

struct SentimentExample {
  std::string text;
  Sentiment label = Sentiment::neutral;
  bool test = false;
};

// CSV with header text,label,split; split is "train" or "test".
std::vector<SentimentExample> parse_sentiment_csv(std::string_view csv);
std::vector<SentimentExample> load_sentiment_csv(const std::string& path);

struct SentimentHyper {
  double lr = 0.2;
  std::size_t epochs = 60;
};

// SGD on squared error between tanh score and the target +1 / 0 / -1.
SentimentModel train_sentiment(std::span<const SentimentExample> examples,
                               const SentimentHyper& hyper, Rng& rng);
double sentiment_accuracy(const SentimentModel& model, std::span<const SentimentExample> examples);

std::string sentiment_to_json(const SentimentModel& model);
SentimentModel sentiment_from_json(std::string_view text);

}  // namespace fatigue
