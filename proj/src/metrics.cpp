#include "moodshift/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace moodshift {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto c : row) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i) t += counts[i][i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t gold) const {
  std::uint64_t t = 0;
  for (auto c : counts[gold]) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row[pred];
  return t;
}

ConfusionMatrix confusion(std::span<const SentimentLabel> gold, std::span<const SentimentLabel> pred) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("confusion: length mismatch (gold=" + std::to_string(gold.size()) +
                                ", pred=" + std::to_string(pred.size()) + ")");
  if (gold.empty()) throw std::invalid_argument("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts[label_index(gold[i])][label_index(pred[i])];
  return cm;
}

EvalReport evaluate(const ConfusionMatrix& cm, std::string model_name, Averaging avg) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw std::invalid_argument("evaluate: confusion matrix is all zero");

  EvalReport r;
  r.model_name = std::move(model_name);
  r.matrix = cm;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    ClassReport& cr = r.per_class[c];
    cr.label = label_from_index(c);
    const double tp = static_cast<double>(cm.counts[c][c]);
    const auto col = cm.col_sum(c), row = cm.row_sum(c);
    cr.support = row;
    cr.precision = col > 0 ? tp / static_cast<double>(col) : 0.0;
    cr.recall = row > 0 ? tp / static_cast<double>(row) : 0.0;
    cr.zero_division = col == 0 || row == 0;
    const double pr = cr.precision + cr.recall;
    cr.f1 = pr > 0 ? 2.0 * cr.precision * cr.recall / pr : 0.0;
  }
  for (const auto& cr : r.per_class) {
    const double w = avg == Averaging::Weighted ? static_cast<double>(cr.support) / static_cast<double>(total)
                                                : 1.0 / static_cast<double>(kNumLabels);
    r.overall_precision += w * cr.precision;
    r.overall_recall += w * cr.recall;
    r.overall_f1 += w * cr.f1;
  }
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  return r;
}

int percent(double x) {
  // tolerance absorbs binary representation error at exact .5 boundaries
  return static_cast<int>(std::floor(x * 100.0 + 0.5 + 1e-9));
}

std::string render_table(std::span<const EvalReport> reports) {
  std::ostringstream os;
  char buf[128];
  bool first = true;
  for (const auto& r : reports) {
    if (!first) os << '\n';
    first = false;
    os << r.model_name << '\n';
    std::snprintf(buf, sizeof buf, "%-10s%9s%9s%9s%6s\n", "Class", "Negative", "Neutral", "Positive", "All");
    os << buf;
    auto row = [&](const char* name, double ClassReport::*field, double all) {
      std::snprintf(buf, sizeof buf, "%-10s%9d%9d%9d%6d\n", name, percent(r.per_class[0].*field),
                    percent(r.per_class[1].*field), percent(r.per_class[2].*field), percent(all));
      os << buf;
    };
    row("Precision", &ClassReport::precision, r.overall_precision);
    row("Recall", &ClassReport::recall, r.overall_recall);
    row("F1-score", &ClassReport::f1, r.overall_f1);
    std::snprintf(buf, sizeof buf, "%-10s%9s%9s%9s%6d\n", "Accuracy", "", "", "", percent(r.accuracy));
    os << buf;
    bool zero_div = false;
    for (const auto& cr : r.per_class) zero_div = zero_div || cr.zero_division;
    if (zero_div) {
      os << "note: empty class";
      for (const auto& cr : r.per_class) {
        if (cr.zero_division) os << ' ' << label_title(cr.label);
      }
      os << "; undefined metrics reported as 0\n";
    }
  }
  return os.str();
}

void write_predictions(std::ostream& out, std::span<const PredictionRow> rows) {
  for (const auto& r : rows) out << r.tweet_id << '\t' << label_name(r.gold) << '\t' << label_name(r.pred) << '\n';
}

std::vector<PredictionRow> read_predictions(std::istream& in) {
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw std::invalid_argument("prediction line " + std::to_string(lineno) + ": expected 3 tab-separated fields");
    auto gold = parse_label(std::string_view(line).substr(t1 + 1, t2 - t1 - 1));
    auto pred = parse_label(std::string_view(line).substr(t2 + 1));
    if (!gold || !pred) throw std::invalid_argument("prediction line " + std::to_string(lineno) + ": invalid label");
    rows.push_back({line.substr(0, t1), *gold, *pred});
  }
  return rows;
}

std::vector<PredictionRow> read_predictions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prediction file: " + path);
  return read_predictions(in);
}

}  // namespace moodshift
