#include "moodshift/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "moodshift/unicode.hpp"

namespace moodshift {

void Lexicon::add(std::string term, double valence) {
  if (!std::isfinite(valence) || valence < -4.0 || valence > 4.0)
    throw std::invalid_argument("lexicon valence out of [-4,4] for term '" + term + "'");
  if (term.empty()) throw std::invalid_argument("empty lexicon term");
  if (!entries_.emplace(std::move(term), valence).second) throw std::invalid_argument("duplicate lexicon term");
}

const double* Lexicon::find(std::string_view term) const {
  auto it = entries_.find(std::string(term));
  return it == entries_.end() ? nullptr : &it->second;
}

Lexicon Lexicon::load(std::istream& in) {
  Lexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument("lexicon line " + std::to_string(lineno) + ": expected term<TAB>valence");
    std::string term = line.substr(0, tab);
    std::string_view val(line.data() + tab + 1, line.size() - tab - 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc{} || ptr != val.data() + val.size())
      throw std::invalid_argument("lexicon line " + std::to_string(lineno) + ": bad valence");
    try {
      lex.add(unicode::ascii_lower(term), v);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("lexicon line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lex;
}

Lexicon Lexicon::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
  return load(in);
}

void RuleConfig::validate() const {
  if (!(neg_cut < pos_cut)) throw std::invalid_argument("RuleConfig: neg_cut must be < pos_cut");
  for (double m : {negation_flip, exclamation_boost, question_dampen, question_floor, caps_boost, normalizer_alpha}) {
    if (!std::isfinite(m)) throw std::invalid_argument("RuleConfig: multipliers must be finite");
  }
  if (negation_window < 0) throw std::invalid_argument("RuleConfig: negation_window must be >= 0");
  if (normalizer_alpha <= 0) throw std::invalid_argument("RuleConfig: normalizer_alpha must be > 0");
}

double PolarityScore::raw_sum() const {
  double s = 0.0;
  for (const auto& [tok, c] : token_scores) s += c;
  return s;
}

namespace {

bool is_bang_or_question(char32_t c) { return c == U'!' || c == U'?'; }

void split_piece(std::u32string_view piece, std::vector<std::string>& out) {
  std::size_t end = piece.size();
  while (end > 0 && is_bang_or_question(piece[end - 1])) --end;
  if (end > 0) out.push_back(unicode::encode_utf8(piece.substr(0, end)));
  if (end < piece.size()) out.push_back(unicode::encode_utf8(piece.substr(end)));
}

bool is_punct_run(std::string_view tok) {
  return !tok.empty() && std::all_of(tok.begin(), tok.end(), [](char c) { return c == '!' || c == '?'; });
}

bool is_negator(std::string_view key) {
  if (key == "not" || key == "no" || key == "never") return true;
  auto ends_with = [&](std::string_view suf) {
    return key.size() >= suf.size() && key.substr(key.size() - suf.size()) == suf;
  };
  return ends_with("n't") || ends_with("n\xE2\x80\x99t");
}

bool is_all_caps(std::string_view tok) {
  int letters = 0;
  for (char c : tok) {
    if (c >= 'a' && c <= 'z') return false;
    if (c >= 'A' && c <= 'Z') ++letters;
  }
  return letters >= 2;
}

bool is_emoji_token(std::string_view tok) {
  auto cps = unicode::decode_utf8(tok);
  return !cps.empty() && unicode::is_emoji(cps.front());
}

}  // namespace

std::vector<std::string> tokenize_sentiment(std::string_view text) {
  std::vector<std::string> out;
  const std::u32string cps = unicode::decode_utf8(text);
  std::u32string piece;
  auto flush = [&] {
    if (!piece.empty()) split_piece(piece, out);
    piece.clear();
  };
  for (char32_t cp : cps) {
    if (unicode::is_whitespace(cp)) {
      flush();
    } else if (unicode::is_emoji(cp)) {
      flush();
      std::string e;
      unicode::append_utf8(e, cp);
      out.push_back(std::move(e));
    } else if (unicode::is_emoji_modifier(cp)) {
      continue;
    } else {
      piece.push_back(cp);
    }
  }
  flush();
  return out;
}

std::string lexicon_key(std::string_view token) {
  static constexpr std::string_view kEdge = ".,;:\"'()[]{}<>*_~`";
  std::size_t b = 0, e = token.size();
  while (b < e && kEdge.find(token[b]) != std::string_view::npos) ++b;
  while (e > b && kEdge.find(token[e - 1]) != std::string_view::npos) --e;
  // strip a trailing ellipsis or curly quotes
  std::string key = unicode::ascii_lower(token.substr(b, e - b));
  for (std::string_view suf : {"\xE2\x80\xA6", "\xE2\x80\x9D", "\xE2\x80\x99"}) {
    while (key.size() >= suf.size() && key.compare(key.size() - suf.size(), suf.size(), suf) == 0)
      key.erase(key.size() - suf.size());
  }
  return key;
}

PolarityScore score_valence(const std::vector<std::string>& tokens, const Lexicon& lexicon, const RuleConfig& rules) {
  if (lexicon.empty()) throw std::invalid_argument("score_valence: lexicon is empty");
  PolarityScore score;
  std::vector<std::string> keys;
  keys.reserve(tokens.size());
  for (const auto& t : tokens) keys.push_back(lexicon_key(t));

  double sum = 0.0;
  int bangs = 0, questions = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& tok = tokens[i];
    if (is_punct_run(tok)) {
      bangs += static_cast<int>(std::count(tok.begin(), tok.end(), '!'));
      questions += static_cast<int>(std::count(tok.begin(), tok.end(), '?'));
      continue;
    }
    const double* v = lexicon.find(keys[i]);
    if (!v) continue;
    double c = *v;
    if (is_all_caps(tok)) c *= rules.caps_boost;
    const std::size_t lo = i >= static_cast<std::size_t>(rules.negation_window) ? i - rules.negation_window : 0;
    for (std::size_t j = lo; j < i; ++j) {
      if (is_negator(keys[j])) {
        c *= rules.negation_flip;
        break;
      }
    }
    sum += c;
    score.token_scores.emplace_back(tok, c);
  }

  if (sum != 0.0 && bangs > 0) {
    const double boost = rules.exclamation_boost * std::min(bangs, rules.exclamation_cap);
    const double delta = sum > 0 ? boost : -boost;
    sum += delta;
    score.token_scores.emplace_back(std::string(static_cast<std::size_t>(bangs), '!'), delta);
  }
  if (sum != 0.0 && questions > 0) {
    const double m = std::max(rules.question_floor, std::pow(rules.question_dampen, questions));
    const double delta = sum * m - sum;
    sum += delta;
    score.token_scores.emplace_back(std::string(static_cast<std::size_t>(questions), '?'), delta);
  }
  score.compound = sum / std::sqrt(sum * sum + rules.normalizer_alpha);
  return score;
}

SentimentLabel classify_lexicon(const PolarityScore& score, const RuleConfig& rules) {
  if (score.compound < rules.neg_cut) return SentimentLabel::Negative;
  if (score.compound > rules.pos_cut) return SentimentLabel::Positive;
  return SentimentLabel::Neutral;
}

SentimentLabel classify_average_polarity(const std::vector<std::string>& tokens, const Lexicon& lexicon,
                                         const RuleConfig& rules) {
  if (lexicon.empty()) throw std::invalid_argument("classify_average_polarity: lexicon is empty");
  double sum = 0.0;
  std::size_t hits = 0;
  for (const auto& tok : tokens) {
    if (is_punct_run(tok) || is_emoji_token(tok)) continue;
    if (const double* v = lexicon.find(lexicon_key(tok))) {
      sum += *v;
      ++hits;
    }
  }
  if (hits == 0) return SentimentLabel::Neutral;
  const double mean = sum / static_cast<double>(hits) / 4.0;
  if (mean < rules.neg_cut) return SentimentLabel::Negative;
  if (mean > rules.pos_cut) return SentimentLabel::Positive;
  return SentimentLabel::Neutral;
}

BaselineEngine parse_engine(std::string_view name) {
  if (name == "lexicon") return BaselineEngine::Lexicon;
  if (name == "average") return BaselineEngine::Average;
  throw std::invalid_argument("unknown engine '" + std::string(name) + "' (expected lexicon|average)");
}

SentimentLabel classify_text(std::string_view text, const Lexicon& lexicon, const RuleConfig& rules,
                             BaselineEngine engine) {
  const auto tokens = tokenize_sentiment(text);
  if (engine == BaselineEngine::Average) return classify_average_polarity(tokens, lexicon, rules);
  return classify_lexicon(score_valence(tokens, lexicon, rules), rules);
}

}  // namespace moodshift
