#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "moodshift/label.hpp"

namespace moodshift {

/// Term -> valence in [-4, 4]. Terms are lowercase words or emoji sequences.
class Lexicon {
 public:
  /// Throws std::invalid_argument on a duplicate term or out-of-range valence.
  void add(std::string term, double valence);
  const double* find(std::string_view term) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// `term<TAB>valence` lines; '#' starts a comment line.
  static Lexicon load(std::istream& in);
  static Lexicon load_file(const std::string& path);

 private:
  std::unordered_map<std::string, double> entries_;
};

struct RuleConfig {
  int negation_window = 3;
  double negation_flip = -0.74;
  double exclamation_boost = 0.292;  // per '!', at most exclamation_cap counted
  int exclamation_cap = 3;
  double question_dampen = 0.9;  // per '?'
  double question_floor = 0.7;
  double caps_boost = 1.5;
  double neg_cut = -0.05;
  double pos_cut = 0.05;
  /// Denominator offset in compound = S / sqrt(S^2 + alpha).
  double normalizer_alpha = 15.0;

  /// Throws std::invalid_argument when neg_cut >= pos_cut or a multiplier is
  /// not finite.
  void validate() const;
};

struct PolarityScore {
  double compound = 0.0;
  /// Lexical hits plus one entry per punctuation adjustment, so that the
  /// contributions sum to the pre-normalization total.
  std::vector<std::pair<std::string, double>> token_scores;

  double raw_sum() const;
};

/// Whitespace split; each emoji becomes its own token and a trailing run of
/// '!'/'?' is split off. Case preserved.
std::vector<std::string> tokenize_sentiment(std::string_view text);

/// Lookup key for a token: ASCII-lowercased with edge punctuation stripped.
std::string lexicon_key(std::string_view token);

PolarityScore score_valence(const std::vector<std::string>& tokens, const Lexicon& lexicon, const RuleConfig& rules);

SentimentLabel classify_lexicon(const PolarityScore& score, const RuleConfig& rules);

/// Mean valence of plain-word hits, rescaled to [-1, 1] by dividing by 4,
/// then cut at the same thresholds. No negation, punctuation or emoji rules.
SentimentLabel classify_average_polarity(const std::vector<std::string>& tokens, const Lexicon& lexicon,
                                         const RuleConfig& rules);

enum class BaselineEngine { Lexicon, Average };

BaselineEngine parse_engine(std::string_view name);
SentimentLabel classify_text(std::string_view text, const Lexicon& lexicon, const RuleConfig& rules,
                             BaselineEngine engine);

}  // namespace moodshift
