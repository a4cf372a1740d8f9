#include "moodshift/topic_shift.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

namespace moodshift {

namespace {

std::set<std::string> top_set(const lda::TopicSummary& s) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < s.top_terms.size() && i < lda::kTopTerms; ++i) out.insert(s.top_terms[i].first);
  return out;
}

std::string display_name(const lda::TopicSummary& s) {
  return s.name.empty() ? "topic " + std::to_string(s.topic_id + 1) : s.name;
}

void sort_by_contribution(std::vector<lda::TopicSummary>& v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.token_contribution > b.token_contribution;
  });
}

}  // namespace

double top_term_jaccard(const lda::TopicSummary& a, const lda::TopicSummary& b) {
  const auto sa = top_set(a), sb = top_set(b);
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

TopicComparison topic_shift(const std::vector<lda::TopicSummary>& pre, const std::vector<lda::TopicSummary>& post,
                            double threshold) {
  TopicComparison cmp;
  cmp.match_threshold = threshold;
  cmp.similarity.assign(pre.size(), std::vector<double>(post.size(), 0.0));

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < pre.size(); ++i) {
    for (std::size_t j = 0; j < post.size(); ++j) {
      cmp.similarity[i][j] = top_term_jaccard(pre[i], post[j]);
      pairs.emplace_back(cmp.similarity[i][j], i, j);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });

  std::vector<bool> pre_used(pre.size(), false), post_used(post.size(), false);
  for (const auto& [sim, i, j] : pairs) {
    if (sim < threshold) break;
    if (pre_used[i] || post_used[j]) continue;
    pre_used[i] = post_used[j] = true;
    cmp.surviving.push_back({pre[i], post[j], sim});
  }
  for (std::size_t i = 0; i < pre.size(); ++i)
    if (!pre_used[i]) cmp.disappeared.push_back(pre[i]);
  for (std::size_t j = 0; j < post.size(); ++j)
    if (!post_used[j]) cmp.emergent.push_back(post[j]);

  std::stable_sort(cmp.surviving.begin(), cmp.surviving.end(), [](const auto& a, const auto& b) {
    return a.pre.token_contribution > b.pre.token_contribution;
  });
  sort_by_contribution(cmp.disappeared);
  sort_by_contribution(cmp.emergent);
  return cmp;
}

std::string render_topic_comparison(const TopicComparison& cmp) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "Topic matching (Jaccard on top-%zu terms, threshold %.2f)\n", lda::kTopTerms,
                cmp.match_threshold);
  os << buf;
  os << "surviving:\n";
  if (cmp.surviving.empty()) os << "  (none)\n";
  for (const auto& s : cmp.surviving) {
    std::snprintf(buf, sizeof buf, "  %s (%.1f%%) -> %s (%.1f%%)  jaccard %.3f\n", display_name(s.pre).c_str(),
                  s.pre.token_contribution, display_name(s.post).c_str(), s.post.token_contribution, s.similarity);
    os << buf;
  }
  os << "disappeared:\n";
  if (cmp.disappeared.empty()) os << "  (none)\n";
  for (const auto& t : cmp.disappeared) {
    std::snprintf(buf, sizeof buf, "  %s (%.1f%%)\n", display_name(t).c_str(), t.token_contribution);
    os << buf;
  }
  os << "emergent:\n";
  if (cmp.emergent.empty()) os << "  (none)\n";
  for (const auto& t : cmp.emergent) {
    std::snprintf(buf, sizeof buf, "  %s (%.1f%%)\n", display_name(t).c_str(), t.token_contribution);
    os << buf;
  }
  if (!cmp.similarity.empty() && !cmp.similarity.front().empty()) {
    os << "similarity (rows pre, columns post):\n";
    for (const auto& row : cmp.similarity) {
      os << ' ';
      for (double s : row) {
        std::snprintf(buf, sizeof buf, " %.3f", s);
        os << buf;
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace moodshift
