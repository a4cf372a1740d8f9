#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "moodshift/label.hpp"

namespace moodshift {

/// Rows are gold labels, columns predictions, both in label order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumLabels>, kNumLabels> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t gold) const;
  std::uint64_t col_sum(std::size_t pred) const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassReport {
  SentimentLabel label = SentimentLabel::Neutral;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  /// Set when precision or recall hit the 0/0 case and were reported as 0.
  bool zero_division = false;
};

enum class Averaging { Weighted, Macro };

struct EvalReport {
  std::string model_name;
  std::array<ClassReport, kNumLabels> per_class{};
  double overall_precision = 0.0;
  double overall_recall = 0.0;
  double overall_f1 = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix matrix;
};

/// Throws std::invalid_argument on length mismatch or empty input.
ConfusionMatrix confusion(std::span<const SentimentLabel> gold, std::span<const SentimentLabel> pred);

/// Per-class P/R/F1 with 0 for empty denominators; overall values averaged
/// by gold support (or unweighted for Averaging::Macro); accuracy =
/// trace/total. Throws std::invalid_argument for an all-zero matrix.
EvalReport evaluate(const ConfusionMatrix& cm, std::string model_name, Averaging avg = Averaging::Weighted);

/// Percent rounded half-up, e.g. 0.685 -> 69.
int percent(double x);

/// Fixed-width blocks, one per report, rows Precision/Recall/F1-score/
/// Accuracy and columns Negative/Neutral/Positive/All.
std::string render_table(std::span<const EvalReport> reports);

struct PredictionRow {
  std::string tweet_id;
  SentimentLabel gold = SentimentLabel::Neutral;
  SentimentLabel pred = SentimentLabel::Neutral;
};

/// `tweet_id<TAB>gold<TAB>pred` lines.
void write_predictions(std::ostream& out, std::span<const PredictionRow> rows);
std::vector<PredictionRow> read_predictions(std::istream& in);
std::vector<PredictionRow> read_predictions_file(const std::string& path);

}  // namespace moodshift
