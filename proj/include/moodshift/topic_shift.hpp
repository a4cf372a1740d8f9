#pragma once

#include <string>
#include <vector>

#include "moodshift/lda.hpp"

namespace moodshift {

struct SurvivingTopic {
  lda::TopicSummary pre;
  lda::TopicSummary post;
  double similarity = 0.0;
};

struct TopicComparison {
  std::vector<SurvivingTopic> surviving;       // descending pre contribution
  std::vector<lda::TopicSummary> disappeared;  // descending contribution
  std::vector<lda::TopicSummary> emergent;     // descending contribution
  double match_threshold = 0.3;
  /// Jaccard similarity of every (pre, post) pair, pre-major.
  std::vector<std::vector<double>> similarity;
};

/// Jaccard overlap of the first kTopTerms terms of each summary.
double top_term_jaccard(const lda::TopicSummary& a, const lda::TopicSummary& b);

/// Greedy maximum-similarity matching: candidate pairs are visited in
/// descending Jaccard order (ties by pre index, then post index) and
/// accepted when both sides are still free and the overlap reaches
/// `threshold`. Unmatched pre topics disappeared, unmatched post topics are
/// emergent. Either list may be empty.
TopicComparison topic_shift(const std::vector<lda::TopicSummary>& pre, const std::vector<lda::TopicSummary>& post,
                            double threshold = 0.3);

/// Matching table plus the full similarity matrix, for human review.
std::string render_topic_comparison(const TopicComparison& cmp);

}  // namespace moodshift
