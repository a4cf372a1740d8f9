#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace moodshift {

// Ordered Negative < Neutral < Positive; the numeric value is the index used
// in confusion matrices and classifier outputs.
enum class SentimentLabel : int { Negative = 0, Neutral = 1, Positive = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<SentimentLabel, kNumLabels> kAllLabels = {
    SentimentLabel::Negative, SentimentLabel::Neutral, SentimentLabel::Positive};

constexpr std::size_t label_index(SentimentLabel l) { return static_cast<std::size_t>(l); }

constexpr SentimentLabel label_from_index(std::size_t i) {
  if (i >= kNumLabels) throw std::out_of_range("label index out of range");
  return static_cast<SentimentLabel>(i);
}

/// Lowercase wire name: "negative" | "neutral" | "positive".
constexpr std::string_view label_name(SentimentLabel l) {
  switch (l) {
    case SentimentLabel::Negative: return "negative";
    case SentimentLabel::Neutral: return "neutral";
    case SentimentLabel::Positive: return "positive";
  }
  return "neutral";
}

/// Capitalized form used in rendered tables.
constexpr std::string_view label_title(SentimentLabel l) {
  switch (l) {
    case SentimentLabel::Negative: return "Negative";
    case SentimentLabel::Neutral: return "Neutral";
    case SentimentLabel::Positive: return "Positive";
  }
  return "Neutral";
}

/// Accepts the wire names plus the table shorthands "-", "0", "+".
inline std::optional<SentimentLabel> parse_label(std::string_view s) {
  if (s == "negative" || s == "-") return SentimentLabel::Negative;
  if (s == "neutral" || s == "0") return SentimentLabel::Neutral;
  if (s == "positive" || s == "+") return SentimentLabel::Positive;
  return std::nullopt;
}

inline SentimentLabel parse_label_or_throw(std::string_view s) {
  auto l = parse_label(s);
  if (!l) throw std::invalid_argument("invalid sentiment label: '" + std::string(s) + "'");
  return *l;
}

}  // namespace moodshift
