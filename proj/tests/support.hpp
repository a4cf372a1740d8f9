#pragma once

// Fixture loaders and independent oracles shared by the unit tests and the
// acceptance binary. The oracles recompute quantities from first principles
// rather than calling the code under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "moodshift/lda.hpp"
#include "moodshift/metrics.hpp"
#include "moodshift/nnclassifier.hpp"
#include "moodshift/random.hpp"
#include "moodshift/transformer.hpp"

#ifndef MOODSHIFT_FIXTURES
#define MOODSHIFT_FIXTURES "data/fixtures"
#endif
#ifndef MOODSHIFT_DATA
#define MOODSHIFT_DATA "data"
#endif

namespace moodshift::testing {

inline std::string fixture(const std::string& name) { return std::string(MOODSHIFT_FIXTURES) + "/" + name; }
inline std::string data_file(const std::string& name) { return std::string(MOODSHIFT_DATA) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

// ---- topic-shift fixture ----

struct TopicFixture {
  std::vector<lda::TopicSummary> pre;
  std::vector<lda::TopicSummary> post;
};

inline TopicFixture load_topic_fixture(const std::string& path) {
  std::istringstream in(slurp(path));
  TopicFixture f;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 5) throw std::runtime_error("bad topic fixture line: " + line);
    lda::TopicSummary t;
    t.topic_id = std::stoi(cols[1]) - 1;  // file ids are 1-based as printed
    t.token_contribution = std::stod(cols[2]);
    t.name = cols[3];
    for (const auto& term : split(cols[4], ',')) t.top_terms.emplace_back(term, 0.0);
    t.salient_terms = t.top_terms;
    (cols[0] == "pre" ? f.pre : f.post).push_back(std::move(t));
  }
  return f;
}

// ---- calibration cases ----

struct CalibrationCase {
  std::string kind;
  SentimentLabel hand, vader, textblob;
  std::string text;
};

inline std::vector<CalibrationCase> load_calibration_cases(const std::string& path) {
  std::istringstream in(slurp(path));
  std::vector<CalibrationCase> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto c = split(line, '\t');
    if (c.size() != 5) throw std::runtime_error("bad case line: " + line);
    out.push_back({c[0], parse_label_or_throw(c[1]), parse_label_or_throw(c[2]), parse_label_or_throw(c[3]), c[4]});
  }
  return out;
}

// ---- metrics oracle ----

// Definitional per-class and weighted metrics computed from expanded
// (gold, pred) lists by counting, never touching the matrix accessors.
struct OracleMetrics {
  std::array<double, kNumLabels> precision{}, recall{}, f1{};
  double overall_precision = 0, overall_recall = 0, overall_f1 = 0, accuracy = 0;
};

inline OracleMetrics metrics_oracle(const std::vector<SentimentLabel>& gold, const std::vector<SentimentLabel>& pred) {
  OracleMetrics m;
  const double n = static_cast<double>(gold.size());
  double correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i];
  m.accuracy = correct / n;
  for (auto l : kAllLabels) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      tp += gold[i] == l && pred[i] == l;
      fp += gold[i] != l && pred[i] == l;
      fn += gold[i] == l && pred[i] != l;
    }
    const auto c = label_index(l);
    m.precision[c] = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    m.recall[c] = tp + fn == 0 ? 0.0 : tp / (tp + fn);
    m.f1[c] = m.precision[c] + m.recall[c] == 0 ? 0.0 : 2 * m.precision[c] * m.recall[c] / (m.precision[c] + m.recall[c]);
    const double w = (tp + fn) / n;
    m.overall_precision += w * m.precision[c];
    m.overall_recall += w * m.recall[c];
    m.overall_f1 += w * m.f1[c];
  }
  return m;
}

inline void expand(const ConfusionMatrix& cm, std::vector<SentimentLabel>& gold, std::vector<SentimentLabel>& pred) {
  for (std::size_t g = 0; g < kNumLabels; ++g)
    for (std::size_t p = 0; p < kNumLabels; ++p)
      for (std::uint64_t k = 0; k < cm.counts[g][p]; ++k) {
        gold.push_back(label_from_index(g));
        pred.push_back(label_from_index(p));
      }
}

/// Largest absolute difference between evaluate() and the oracle.
inline double metrics_discrepancy(const ConfusionMatrix& cm) {
  std::vector<SentimentLabel> gold, pred;
  expand(cm, gold, pred);
  const auto o = metrics_oracle(gold, pred);
  const auto r = evaluate(cm, "x");
  double d = 0;
  for (std::size_t c = 0; c < kNumLabels; ++c) {
    d = std::max({d, std::abs(o.precision[c] - r.per_class[c].precision), std::abs(o.recall[c] - r.per_class[c].recall),
                  std::abs(o.f1[c] - r.per_class[c].f1)});
  }
  return std::max({d, std::abs(o.overall_precision - r.overall_precision),
                   std::abs(o.overall_recall - r.overall_recall), std::abs(o.overall_f1 - r.overall_f1),
                   std::abs(o.accuracy - r.accuracy)});
}

inline ConfusionMatrix random_matrix(Rng& rng) {
  ConfusionMatrix cm;
  do {
    const std::size_t cap = 1 + rng.below(60);
    for (auto& row : cm.counts)
      for (auto& v : row) v = rng.uniform01() < 0.15 ? 0 : rng.below(cap);
  } while (cm.total() == 0);
  return cm;
}

// ---- LDA oracles ----

/// Recounts n(t,w), n(d,t), n(t) from the assignments and compares.
inline bool lda_counts_consistent(const lda::LdaModel& m, const lda::DocTermMatrix& dtm) {
  const int k = m.num_topics();
  const std::size_t v = m.vocab_size();
  std::vector<std::uint64_t> tw(static_cast<std::size_t>(k) * v, 0), tt(static_cast<std::size_t>(k), 0);
  std::uint64_t total = 0;
  for (std::size_t d = 0; d < dtm.num_docs(); ++d) {
    std::vector<std::uint64_t> dt(static_cast<std::size_t>(k), 0);
    const auto& z = m.assignments()[d];
    if (z.size() != dtm.docs[d].size()) return false;
    for (std::size_t i = 0; i < z.size(); ++i) {
      ++tw[static_cast<std::size_t>(z[i]) * v + static_cast<std::size_t>(dtm.docs[d][i])];
      ++dt[static_cast<std::size_t>(z[i])];
      ++tt[static_cast<std::size_t>(z[i])];
      ++total;
    }
    for (int t = 0; t < k; ++t)
      if (dt[static_cast<std::size_t>(t)] != m.doc_topic(d, t)) return false;
  }
  for (int t = 0; t < k; ++t) {
    if (tt[static_cast<std::size_t>(t)] != m.topic_total(t)) return false;
    for (std::size_t w = 0; w < v; ++w)
      if (tw[static_cast<std::size_t>(t) * v + w] != m.topic_word(t, w)) return false;
  }
  return total == m.num_tokens();
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// Minimum per-topic cosine under the best permutation of recovered topics.
inline double best_permutation_min_cosine(const Matrix& est, const Matrix& truth) {
  std::vector<std::size_t> perm(truth.rows());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  double best = -1;
  do {
    double worst = 2;
    for (std::size_t t = 0; t < perm.size(); ++t) worst = std::min(worst, cosine(est.row(perm[t]), truth.row(t)));
    best = std::max(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ---- gradient check ----

inline nn::TransformerConfig tiny_config() {
  nn::TransformerConfig c;
  c.vocab_size = 9;
  c.max_len = 6;
  c.d_model = 4;
  c.n_heads = 2;
  c.n_layers = 2;
  c.d_ff = 6;
  return c;
}

inline std::vector<nn::EncodedText> tiny_batch() {
  return {{{2, 3, 4, 5, 0, 0}, {1, 1, 1, 1, 0, 0}}, {{2, 8, 6, 7, 1, 3}, {1, 1, 1, 1, 1, 1}}};
}

struct GradCheck {
  double max_rel_error = 0;
  std::string worst_tensor;
  std::size_t checked = 0;
};

/// Central differences with step eps over every parameter. Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline GradCheck gradient_check(std::uint64_t seed, double eps = 1e-5, double floor = 1e-6) {
  const auto cfg = tiny_config();
  auto params = nn::Parameters::initialize(cfg, seed);
  // Non-trivial layer-norm and bias values so every path carries gradient.
  Rng rng(seed ^ 0xABCDEFull);
  for (auto& t : params.tensors())
    for (auto& v : t.values) v += rng.uniform(-0.2, 0.2);
  const auto batch = tiny_batch();
  const std::vector<SentimentLabel> gold = {SentimentLabel::Positive, SentimentLabel::Negative};
  const auto analytic = nn::loss_and_grad(cfg, params, batch, gold, kernels::Execution::Serial);

  GradCheck out;
  auto& ts = params.tensors();
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    for (std::size_t i = 0; i < ts[ti].values.size(); ++i) {
      const double orig = ts[ti].values[i];
      ts[ti].values[i] = orig + eps;
      const double up = nn::loss_and_grad(cfg, params, batch, gold, kernels::Execution::Serial).loss;
      ts[ti].values[i] = orig - eps;
      const double down = nn::loss_and_grad(cfg, params, batch, gold, kernels::Execution::Serial).loss;
      ts[ti].values[i] = orig;
      const double num = (up - down) / (2 * eps);
      const double a = analytic.grads.tensors()[ti].values[i];
      const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst_tensor = ts[ti].name + "[" + std::to_string(i) + "]";
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace moodshift::testing
