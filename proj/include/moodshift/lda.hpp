#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "moodshift/corpus.hpp"
#include "moodshift/matrix.hpp"
#include "moodshift/vocab.hpp"

namespace moodshift::lda {

class LdaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bag-of-words corpus: one token-id sequence per document.
struct DocTermMatrix {
  Vocab vocab;
  std::vector<std::vector<int>> docs;
  std::vector<std::string> doc_ids;  // source tweet id per document

  std::size_t num_docs() const { return docs.size(); }
  std::size_t num_tokens() const;
  std::size_t vocab_size() const { return vocab.size(); }
};

struct BowResult {
  DocTermMatrix dtm;
  std::size_t dropped_docs = 0;  // documents empty after filtering
};

/// Lowercased runs of letters, digits and hyphens (edge hyphens trimmed).
std::vector<std::string> bow_tokens(std::string_view text);

/// Tokenizes, removes stopwords and terms with document frequency < min_df,
/// and drops documents left empty. Term ids are assigned in lexicographic
/// order. Throws LdaError if the dataset is empty or every document empties.
BowResult build_bow(const Dataset& ds, const std::set<std::string, std::less<>>& stopwords, std::size_t min_df);

std::set<std::string, std::less<>> load_stopwords(const std::string& path);

struct LdaConfig {
  int k = 5;
  double alpha = 0.0;  // <= 0 means 1/k
  double beta = 0.01;
  int iterations = 1000;
  int burn_in = 200;
  std::uint64_t seed = 0;

  double effective_alpha() const { return alpha > 0 ? alpha : 1.0 / k; }
  void validate() const;
};

/// Count state of a collapsed Gibbs sampler.
class LdaModel {
 public:
  /// Builds counts from explicit topic assignments (one per token).
  static LdaModel from_assignments(const DocTermMatrix& dtm, const LdaConfig& cfg,
                                   std::vector<std::vector<int>> assignments);

  int num_topics() const { return k_; }
  std::size_t vocab_size() const { return v_; }
  std::size_t num_docs() const { return doc_topic_.size() / static_cast<std::size_t>(k_); }
  std::uint64_t num_tokens() const { return n_tokens_; }
  const LdaConfig& config() const { return cfg_; }

  std::uint64_t topic_word(int t, std::size_t w) const { return topic_word_[static_cast<std::size_t>(t) * v_ + w]; }
  std::uint64_t doc_topic(std::size_t d, int t) const { return doc_topic_[d * static_cast<std::size_t>(k_) + t]; }
  std::uint64_t topic_total(int t) const { return topic_total_[static_cast<std::size_t>(t)]; }
  const std::vector<std::vector<int>>& assignments() const { return z_; }

  /// Throws LdaError naming the first broken identity among
  /// sum_w n(t,w) = n(t), sum_t n(d,t) = len(d), sum_t n(t) = N.
  void check_invariants(const DocTermMatrix& dtm) const;

 private:
  friend LdaModel fit(const DocTermMatrix&, const LdaConfig&, const std::function<void(const LdaModel&, int)>&);

  LdaModel(const DocTermMatrix& dtm, const LdaConfig& cfg);
  void assign(std::size_t d, int w, int t, int delta);

  LdaConfig cfg_;
  int k_ = 0;
  std::size_t v_ = 0;
  std::uint64_t n_tokens_ = 0;
  std::vector<std::uint64_t> topic_word_;   // k x V
  std::vector<std::uint64_t> doc_topic_;    // D x k
  std::vector<std::uint64_t> topic_total_;  // k
  std::vector<std::vector<int>> z_;
};

using SweepObserver = std::function<void(const LdaModel&, int sweep)>;

/// Collapsed Gibbs sampling. The returned state is the assignment after the
/// final sweep (no averaging over post-burn-in samples). `observer`, if set,
/// runs after every sweep. Throws LdaError when there are fewer documents
/// than topics.
LdaModel fit(const DocTermMatrix& dtm, const LdaConfig& cfg, const SweepObserver& observer = {});

/// phi(t,w) = (n(t,w)+beta) / (n(t)+V*beta)
Matrix phi(const LdaModel& model);
/// theta(d,t) = (n(d,t)+alpha) / (len(d)+K*alpha)
Matrix theta(const LdaModel& model);

/// exp(-sum_d sum_w log sum_t theta(d,t) phi(t,w) / N).
double perplexity(const LdaModel& model, const DocTermMatrix& dtm);

/// saliency(w) = p(w) * sum_t p(t|w) log(p(t|w)/p(t)), with p(w) the corpus
/// frequency, p(t) = n(t)/N and p(t|w) proportional to phi(t,w) p(t).
std::vector<double> saliency(const LdaModel& model, const DocTermMatrix& dtm);

/// Top-n terms by saliency, descending; ties broken lexicographically.
std::vector<std::pair<std::string, double>> saliency_rank(const LdaModel& model, const DocTermMatrix& dtm,
                                                          std::size_t n);

struct TopicSummary {
  int topic_id = 0;
  std::string name;  // human-supplied label; empty when unnamed
  std::vector<std::pair<std::string, double>> top_terms;      // by phi(t,w)
  std::vector<std::pair<std::string, double>> salient_terms;  // by phi(t,w) * saliency(w)
  double token_contribution = 0.0;                            // percent of all tokens
};

inline constexpr std::size_t kTopTerms = 10;
inline constexpr std::size_t kSalientTerms = 30;

/// One summary per topic in topic-id order. `names`, when non-empty,
/// attaches human labels by topic id.
std::vector<TopicSummary> summarize(const LdaModel& model, const DocTermMatrix& dtm,
                                    const std::vector<std::string>& names = {});

/// Human-readable report, topics in descending contribution.
void write_topic_report(std::ostream& out, const std::vector<TopicSummary>& topics);
/// `topic_id,percentage` lines with a header, topics in descending
/// contribution.
void write_pie_data(std::ostream& out, const std::vector<TopicSummary>& topics);

}  // namespace moodshift::lda
