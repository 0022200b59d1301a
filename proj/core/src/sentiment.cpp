#include "fatigue/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fatigue/errors.hpp"
#include "json_util.hpp"

namespace fatigue {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b < 0x80) {
      len = 1;
      cp = b;
    } else if ((b & 0xE0) == 0xC0) {
      len = 2;
      cp = b & 0x1F;
    } else if ((b & 0xF0) == 0xE0) {
      len = 3;
      cp = b & 0x0F;
    } else if ((b & 0xF8) == 0xF0) {
      len = 4;
      cp = b & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto c = static_cast<unsigned char>(s[i + k]);
      if ((c & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (c & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Unicode White_Space property.
bool is_space(char32_t c) {
  return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
         c == 0x205F || c == 0x3000;
}

bool is_punct(char32_t c) {
  if (c < 0x80) return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
                       (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  return c == 0xA1 || c == 0xA7 || c == 0xAB || c == 0xB6 || c == 0xB7 || c == 0xBB ||
         c == 0xBF || (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x3003) || (c >= 0x3008 && c <= 0x3011) || c == kReplacement;
}

char32_t to_lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;  // Latin-1
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;  // Greek
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;                // Cyrillic
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

}  // namespace

std::string_view to_string(Sentiment s) noexcept {
  switch (s) {
    case Sentiment::negative: return "negative";
    case Sentiment::neutral: return "neutral";
    case Sentiment::positive: return "positive";
  }
  return "neutral";
}

Sentiment parse_sentiment(std::string_view s) {
  if (s == "negative") return Sentiment::negative;
  if (s == "neutral") return Sentiment::neutral;
  if (s == "positive") return Sentiment::positive;
  throw ValidationError("unknown sentiment label '" + std::string(s) + "'");
}

std::size_t count_code_points(std::string_view utf8) noexcept {
  std::size_t n = 0;
  for (char c : utf8)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  return n;
}

UtteranceText::UtteranceText(std::string text) : text_(std::move(text)) {
  if (count_code_points(text_) > kMaxUtteranceCodePoints)
    throw ValidationError("utterance exceeds " + std::to_string(kMaxUtteranceCodePoints) + " code points");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char32_t c : decode_utf8(text)) {
    if (is_space(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else if (!is_punct(c)) {
      append_utf8(current, to_lower(c));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));

  std::vector<std::string> tokens = words;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) tokens.push_back(words[i] + " " + words[i + 1]);
  return tokens;
}

double SentimentModel::weight(const std::string& token) const {
  const auto it = weights_.find(token);
  return it == weights_.end() ? 0.0 : it->second;
}

double SentimentModel::raw_score(std::string_view text) const {
  double s = 0.0;
  for (const auto& tok : tokenize(text)) s += weight(tok);
  return s;
}

Sentiment label_for_score(double score, double band) noexcept {
  if (score > band) return Sentiment::positive;
  if (score < -band) return Sentiment::negative;
  return Sentiment::neutral;
}

SentimentLabel classify_sentiment(std::string_view text, const SentimentModel& model) {
  const double score = std::tanh(model.raw_score(text));
  return {label_for_score(score), score};
}

SentimentLabel classify_sentiment(const UtteranceText& text, const SentimentModel& model) {
  return classify_sentiment(std::string_view(text.str()), model);
}

double sentiment_feature(Sentiment s) noexcept {
  switch (s) {
    case Sentiment::positive: return 1.0;
    case Sentiment::negative: return -1.0;
    case Sentiment::neutral: return 0.0;
  }
  return 0.0;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

std::vector<SentimentExample> parse_sentiment_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<SentimentExample> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line, line_no);
    if (line_no == 1) {
      if (fields.size() != 3 || fields[0] != "text" || fields[1] != "label" || fields[2] != "split")
        throw ParseError(1, "expected header text,label,split");
      continue;
    }
    if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
    SentimentExample ex;
    ex.text = fields[0];
    try {
      ex.label = parse_sentiment(fields[1]);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
    if (fields[2] != "train" && fields[2] != "test")
      throw ParseError(line_no, "split must be train or test");
    ex.test = fields[2] == "test";
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<SentimentExample> load_sentiment_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open sentiment dataset " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_sentiment_csv(os.str());
}

SentimentModel train_sentiment(std::span<const SentimentExample> examples,
                               const SentimentHyper& hyper, Rng& rng) {
  SentimentModel model;
  std::vector<std::vector<std::string>> tokens;
  for (const auto& ex : examples) {
    tokens.push_back(tokenize(ex.text));
    for (const auto& t : tokens.back()) model.weights().try_emplace(t, 0.0);
  }
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      double s = 0.0;
      for (const auto& t : tokens[i]) s += model.weights()[t];
      const double y = std::tanh(s);
      const double target = sentiment_feature(examples[i].label);
      const double g = 2.0 * (y - target) * (1.0 - y * y);
      if (tokens[i].empty()) continue;
      const double step = hyper.lr * g / static_cast<double>(tokens[i].size());
      for (const auto& t : tokens[i]) model.weights()[t] -= step;
    }
  }
  return model;
}

double sentiment_accuracy(const SentimentModel& model, std::span<const SentimentExample> examples) {
  if (examples.empty()) throw ValidationError("no examples to evaluate");
  std::size_t correct = 0;
  for (const auto& ex : examples)
    if (classify_sentiment(std::string_view(ex.text), model).label == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::string sentiment_to_json(const SentimentModel& model) {
  detail::json j;
  j["format"] = "fatigue-sentiment";
  j["version"] = 1;
  j["band"] = kNeutralBand;
  detail::json w = detail::json::object();
  for (const auto& [tok, v] : model.weights()) w[tok] = v;
  j["weights"] = w;
  return j.dump(1);
}

SentimentModel sentiment_from_json(std::string_view text) {
  try {
    const auto j = detail::json::parse(text);
    if (j.at("format") != "fatigue-sentiment") throw ValidationError("not a sentiment model document");
    SentimentModel m;
    for (const auto& [tok, v] : j.at("weights").items()) {
      const double w = v.get<double>();
      if (!std::isfinite(w)) throw ValidationError("non-finite weight for token '" + tok + "'");
      m.set_weight(tok, w);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed sentiment document: ") + e.what());
  }
}

}  // namespace fatigue
