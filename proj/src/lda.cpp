#include "moodshift/lda.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "moodshift/kernels.hpp"
#include "moodshift/random.hpp"
#include "moodshift/unicode.hpp"

namespace moodshift::lda {

std::size_t DocTermMatrix::num_tokens() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.size();
  return n;
}

std::vector<std::string> bow_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::u32string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && cur[b] == U'-') ++b;
    while (e > b && cur[e - 1] == U'-') --e;
    if (e > b) out.push_back(unicode::encode_utf8(std::u32string_view(cur).substr(b, e - b)));
    cur.clear();
  };
  for (char32_t cp : unicode::decode_utf8(text)) {
    if (u_isalnum(static_cast<UChar32>(cp)) || cp == U'-') {
      cur.push_back(static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

BowResult build_bow(const Dataset& ds, const std::set<std::string, std::less<>>& stopwords, std::size_t min_df) {
  if (ds.empty()) throw LdaError("build_bow: dataset is empty");
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(ds.size());
  std::map<std::string, std::uint64_t> df;
  for (const auto& item : ds) {
    auto toks = bow_tokens(item.tweet.text);
    std::erase_if(toks, [&](const std::string& t) { return stopwords.contains(t); });
    std::set<std::string_view> uniq(toks.begin(), toks.end());
    for (auto t : uniq) ++df[std::string(t)];
    tokenized.push_back(std::move(toks));
  }

  BowResult res;
  for (const auto& [term, f] : df) {
    if (f >= min_df) res.dtm.vocab.add(term, f);
  }
  for (std::size_t i = 0; i < tokenized.size(); ++i) {
    std::vector<int> doc;
    for (const auto& t : tokenized[i]) {
      if (auto id = res.dtm.vocab.find(t)) doc.push_back(*id);
    }
    if (doc.empty()) {
      ++res.dropped_docs;
      continue;
    }
    res.dtm.docs.push_back(std::move(doc));
    res.dtm.doc_ids.push_back(ds[i].tweet.id);
  }
  if (res.dtm.docs.empty()) throw LdaError("build_bow: every document is empty after filtering");
  return res;
}

std::set<std::string, std::less<>> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LdaError("cannot open stopword file: " + path);
  std::set<std::string, std::less<>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.insert(unicode::ascii_lower(line));
  }
  return out;
}

void LdaConfig::validate() const {
  if (k < 2) throw LdaError("LdaConfig: k must be >= 2");
  if (!(effective_alpha() > 0) || !(beta > 0)) throw LdaError("LdaConfig: alpha and beta must be > 0");
  if (iterations < 1) throw LdaError("LdaConfig: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) throw LdaError("LdaConfig: burn_in must be in [0, iterations)");
}

LdaModel::LdaModel(const DocTermMatrix& dtm, const LdaConfig& cfg)
    : cfg_(cfg),
      k_(cfg.k),
      v_(dtm.vocab_size()),
      topic_word_(static_cast<std::size_t>(cfg.k) * dtm.vocab_size(), 0),
      doc_topic_(dtm.num_docs() * static_cast<std::size_t>(cfg.k), 0),
      topic_total_(static_cast<std::size_t>(cfg.k), 0) {
  z_.resize(dtm.num_docs());
}

void LdaModel::assign(std::size_t d, int w, int t, int delta) {
  topic_word_[static_cast<std::size_t>(t) * v_ + static_cast<std::size_t>(w)] += delta;
  doc_topic_[d * static_cast<std::size_t>(k_) + static_cast<std::size_t>(t)] += delta;
  topic_total_[static_cast<std::size_t>(t)] += delta;
}

LdaModel LdaModel::from_assignments(const DocTermMatrix& dtm, const LdaConfig& cfg,
                                    std::vector<std::vector<int>> assignments) {
  if (cfg.k < 1) throw LdaError("from_assignments: k must be >= 1");
  if (assignments.size() != dtm.num_docs()) throw LdaError("from_assignments: document count mismatch");
  LdaModel m(dtm, cfg);
  for (std::size_t d = 0; d < dtm.num_docs(); ++d) {
    if (assignments[d].size() != dtm.docs[d].size()) throw LdaError("from_assignments: document length mismatch");
    for (std::size_t i = 0; i < assignments[d].size(); ++i) {
      const int t = assignments[d][i];
      if (t < 0 || t >= cfg.k) throw LdaError("from_assignments: topic out of range");
      m.assign(d, dtm.docs[d][i], t, 1);
    }
  }
  m.n_tokens_ = dtm.num_tokens();
  m.z_ = std::move(assignments);
  return m;
}

void LdaModel::check_invariants(const DocTermMatrix& dtm) const {
  std::uint64_t all = 0;
  for (int t = 0; t < k_; ++t) {
    std::uint64_t s = 0;
    for (std::size_t w = 0; w < v_; ++w) s += topic_word(t, w);
    if (s != topic_total(t)) throw LdaError("invariant broken: sum_w n(t,w) != n(t) for topic " + std::to_string(t));
    all += topic_total(t);
  }
  for (std::size_t d = 0; d < num_docs(); ++d) {
    std::uint64_t s = 0;
    for (int t = 0; t < k_; ++t) s += doc_topic(d, t);
    if (s != dtm.docs[d].size()) throw LdaError("invariant broken: sum_t n(d,t) != len(d) for doc " + std::to_string(d));
  }
  if (all != n_tokens_) throw LdaError("invariant broken: sum_t n(t) != N");
}

LdaModel fit(const DocTermMatrix& dtm, const LdaConfig& cfg, const SweepObserver& observer) {
  cfg.validate();
  if (dtm.num_docs() < static_cast<std::size_t>(cfg.k))
    throw LdaError("fit: " + std::to_string(dtm.num_docs()) + " documents < k=" + std::to_string(cfg.k));

  Rng rng(cfg.seed);
  const int k = cfg.k;
  std::vector<std::vector<int>> z(dtm.num_docs());
  for (std::size_t d = 0; d < dtm.num_docs(); ++d) {
    z[d].resize(dtm.docs[d].size());
    for (auto& t : z[d]) t = static_cast<int>(rng.below(static_cast<std::size_t>(k)));
  }
  LdaModel m = LdaModel::from_assignments(dtm, cfg, std::move(z));

  const double alpha = cfg.effective_alpha();
  const double beta = cfg.beta;
  const double vbeta = beta * static_cast<double>(m.v_);
  std::vector<double> cdf(static_cast<std::size_t>(k));
  for (int sweep = 1; sweep <= cfg.iterations; ++sweep) {
    for (std::size_t d = 0; d < dtm.num_docs(); ++d) {
      const auto& doc = dtm.docs[d];
      auto& zd = m.z_[d];
      for (std::size_t i = 0; i < doc.size(); ++i) {
        const int w = doc[i];
        m.assign(d, w, zd[i], -1);
        double acc = 0.0;
        for (int t = 0; t < k; ++t) {
          acc += (static_cast<double>(m.doc_topic(d, t)) + alpha) *
                 (static_cast<double>(m.topic_word(t, static_cast<std::size_t>(w))) + beta) /
                 (static_cast<double>(m.topic_total(t)) + vbeta);
          cdf[static_cast<std::size_t>(t)] = acc;
        }
        const double u = rng.uniform01() * acc;
        int t = 0;
        while (t < k - 1 && cdf[static_cast<std::size_t>(t)] <= u) ++t;
        zd[i] = t;
        m.assign(d, w, t, 1);
      }
    }
#ifndef NDEBUG
    m.check_invariants(dtm);
#endif
    if (observer) observer(m, sweep);
  }
  return m;
}

Matrix phi(const LdaModel& model) {
  const int k = model.num_topics();
  const std::size_t v = model.vocab_size();
  const double beta = model.config().beta;
  Matrix out(static_cast<std::size_t>(k), v);
  for (int t = 0; t < k; ++t) {
    const double denom = static_cast<double>(model.topic_total(t)) + static_cast<double>(v) * beta;
    for (std::size_t w = 0; w < v; ++w)
      out(static_cast<std::size_t>(t), w) = (static_cast<double>(model.topic_word(t, w)) + beta) / denom;
  }
  return out;
}

Matrix theta(const LdaModel& model) {
  const int k = model.num_topics();
  const double alpha = model.config().effective_alpha();
  Matrix out(model.num_docs(), static_cast<std::size_t>(k));
  for (std::size_t d = 0; d < model.num_docs(); ++d) {
    std::uint64_t len = 0;
    for (int t = 0; t < k; ++t) len += model.doc_topic(d, t);
    const double denom = static_cast<double>(len) + k * alpha;
    for (int t = 0; t < k; ++t)
      out(d, static_cast<std::size_t>(t)) = (static_cast<double>(model.doc_topic(d, t)) + alpha) / denom;
  }
  return out;
}

double perplexity(const LdaModel& model, const DocTermMatrix& dtm) {
  const double ll = kernels::lda_log_likelihood_parallel(theta(model), phi(model), dtm.docs);
  return std::exp(-ll / static_cast<double>(dtm.num_tokens()));
}

std::vector<double> saliency(const LdaModel& model, const DocTermMatrix& dtm) {
  const int k = model.num_topics();
  const std::size_t v = model.vocab_size();
  const double n = static_cast<double>(model.num_tokens());
  const Matrix ph = phi(model);

  std::vector<double> freq(v, 0.0);
  for (const auto& doc : dtm.docs)
    for (int w : doc) freq[static_cast<std::size_t>(w)] += 1.0;

  std::vector<double> pt(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) pt[static_cast<std::size_t>(t)] = static_cast<double>(model.topic_total(t)) / n;

  std::vector<double> out(v, 0.0);
  std::vector<double> joint(static_cast<std::size_t>(k));
  for (std::size_t w = 0; w < v; ++w) {
    double z = 0.0;
    for (int t = 0; t < k; ++t) {
      joint[static_cast<std::size_t>(t)] = ph(static_cast<std::size_t>(t), w) * pt[static_cast<std::size_t>(t)];
      z += joint[static_cast<std::size_t>(t)];
    }
    double kl = 0.0;
    if (z > 0) {
      for (int t = 0; t < k; ++t) {
        const double ptw = joint[static_cast<std::size_t>(t)] / z;
        if (ptw > 0) kl += ptw * std::log(ptw / pt[static_cast<std::size_t>(t)]);
      }
    }
    out[w] = freq[w] / n * kl;
  }
  return out;
}

namespace {

std::vector<std::pair<std::string, double>> top_n(const Vocab& vocab, const std::vector<double>& score, std::size_t n) {
  std::vector<std::size_t> idx(score.size());
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (score[a] != score[b]) return score[a] > score[b];
                      return vocab.term(static_cast<int>(a)) < vocab.term(static_cast<int>(b));
                    });
  std::vector<std::pair<std::string, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(vocab.term(static_cast<int>(idx[i])), score[idx[i]]);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, double>> saliency_rank(const LdaModel& model, const DocTermMatrix& dtm,
                                                          std::size_t n) {
  return top_n(dtm.vocab, saliency(model, dtm), n);
}

std::vector<TopicSummary> summarize(const LdaModel& model, const DocTermMatrix& dtm,
                                    const std::vector<std::string>& names) {
  const Matrix ph = phi(model);
  const std::vector<double> sal = saliency(model, dtm);
  const double n = static_cast<double>(model.num_tokens());
  std::vector<TopicSummary> out;
  for (int t = 0; t < model.num_topics(); ++t) {
    TopicSummary s;
    s.topic_id = t;
    if (static_cast<std::size_t>(t) < names.size()) s.name = names[static_cast<std::size_t>(t)];
    const auto row = ph.row(static_cast<std::size_t>(t));
    std::vector<double> prob(row.begin(), row.end());
    s.top_terms = top_n(dtm.vocab, prob, kTopTerms);
    std::vector<double> weighted(prob.size());
    for (std::size_t w = 0; w < prob.size(); ++w) weighted[w] = prob[w] * sal[w];
    s.salient_terms = top_n(dtm.vocab, weighted, kSalientTerms);
    s.token_contribution = n > 0 ? 100.0 * static_cast<double>(model.topic_total(t)) / n : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::vector<const TopicSummary*> by_contribution(const std::vector<TopicSummary>& topics) {
  std::vector<const TopicSummary*> order;
  for (const auto& t : topics) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const TopicSummary* a, const TopicSummary* b) {
    return a->token_contribution > b->token_contribution;
  });
  return order;
}

}  // namespace

void write_topic_report(std::ostream& out, const std::vector<TopicSummary>& topics) {
  char buf[64];
  for (const TopicSummary* t : by_contribution(topics)) {
    std::snprintf(buf, sizeof buf, "%.1f%%", t->token_contribution);
    out << "Topic " << t->topic_id + 1 << "  contribution " << buf;
    if (!t->name.empty()) out << "  inferred: " << t->name;
    out << "\n  top terms:";
    for (const auto& [term, p] : t->top_terms) {
      std::snprintf(buf, sizeof buf, "%.4f", p);
      out << ' ' << term << " (" << buf << ')';
    }
    out << "\n  salient terms:";
    for (const auto& [term, s] : t->salient_terms) out << ' ' << term;
    out << '\n';
  }
}

void write_pie_data(std::ostream& out, const std::vector<TopicSummary>& topics) {
  char buf[64];
  out << "topic_id,percentage\n";
  for (const TopicSummary* t : by_contribution(topics)) {
    std::snprintf(buf, sizeof buf, "%d,%.1f\n", t->topic_id + 1, t->token_contribution);
    out << buf;
  }
}

}  // namespace moodshift::lda
