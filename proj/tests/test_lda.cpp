#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "moodshift/lda.hpp"
#include "moodshift/synthetic.hpp"
#include "support.hpp"

using namespace moodshift;
using namespace moodshift::lda;

namespace {

Dataset texts(const std::vector<std::string>& ts) {
  Dataset ds("t");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    LabeledTweet it;
    it.tweet.id = std::to_string(i);
    it.tweet.text = ts[i];
    ds.add(it);
  }
  return ds;
}

DocTermMatrix toy(const std::vector<std::string>& terms, std::vector<std::vector<int>> docs) {
  DocTermMatrix dtm;
  for (const auto& t : terms) dtm.vocab.add(t);
  dtm.docs = std::move(docs);
  for (std::size_t d = 0; d < dtm.docs.size(); ++d) dtm.doc_ids.push_back(std::to_string(d));
  return dtm;
}

LdaConfig cfg(int k, int iterations, std::uint64_t seed = 1) {
  LdaConfig c;
  c.k = k;
  c.iterations = iterations;
  c.burn_in = 0;
  c.seed = seed;
  return c;
}

// Saliency recomputed directly from the count tables.
std::vector<double> saliency_oracle(const LdaModel& m, const DocTermMatrix& dtm) {
  const double n = static_cast<double>(m.num_tokens());
  const double beta = m.config().beta;
  const std::size_t v = m.vocab_size();
  std::vector<double> freq(v, 0);
  for (const auto& doc : dtm.docs)
    for (int w : doc) freq[static_cast<std::size_t>(w)] += 1;
  std::vector<double> out(v, 0);
  for (std::size_t w = 0; w < v; ++w) {
    std::vector<double> joint(static_cast<std::size_t>(m.num_topics()));
    double z = 0;
    for (int t = 0; t < m.num_topics(); ++t) {
      const double pt = static_cast<double>(m.topic_total(t)) / n;
      const double ph = (static_cast<double>(m.topic_word(t, w)) + beta) /
                        (static_cast<double>(m.topic_total(t)) + static_cast<double>(v) * beta);
      joint[static_cast<std::size_t>(t)] = ph * pt;
      z += ph * pt;
    }
    double kl = 0;
    for (int t = 0; t < m.num_topics(); ++t) {
      const double pt = static_cast<double>(m.topic_total(t)) / n;
      const double ptw = joint[static_cast<std::size_t>(t)] / z;
      if (ptw > 0 && pt > 0) kl += ptw * std::log(ptw / pt);
    }
    out[w] = freq[w] / n * kl;
  }
  return out;
}

}  // namespace

TEST_CASE("bag of words tokens, stopwords and min_df") {
  const auto one = build_bow(texts({"cat cat dog"}), {}, 1);
  CHECK(one.dtm.vocab_size() == 2);
  REQUIRE(one.dtm.docs.size() == 1);
  CHECK(one.dtm.docs[0].size() == 3);
  CHECK(one.dtm.vocab.term(one.dtm.docs[0][0]) == "cat");

  const auto sw = build_bow(texts({"the cat", "The dog"}), {"the"}, 1);
  CHECK(!sw.dtm.vocab.find("the"));
  CHECK(sw.dtm.num_tokens() == 2);

  CHECK(bow_tokens("M-pox is -here- 100%!") == std::vector<std::string>{"m-pox", "is", "here", "100"});

  const auto dropped = build_bow(texts({"the", "cat"}), {"the"}, 1);
  CHECK(dropped.dropped_docs == 1);
  CHECK(dropped.dtm.doc_ids == std::vector<std::string>{"1"});
  CHECK_THROWS_AS(build_bow(texts({"the the"}), {"the"}, 1), LdaError);
}

TEST_CASE("min_df vocabulary equals a brute-force document-frequency filter") {
  Rng rng(9);
  std::vector<std::string> docs;
  for (int d = 0; d < 100; ++d) {
    std::string s;
    const auto len = 3 + rng.below(10);
    for (std::size_t i = 0; i < len; ++i) s += "w" + std::to_string(rng.below(60)) + " ";
    docs.push_back(s);
  }
  std::map<std::string, std::set<int>> df;
  for (int d = 0; d < 100; ++d)
    for (const auto& t : bow_tokens(docs[static_cast<std::size_t>(d)])) df[t].insert(d);
  std::vector<std::string> expected;
  for (const auto& [t, s] : df)
    if (s.size() >= 5) expected.push_back(t);
  const auto bow = build_bow(texts(docs), {}, 5);
  CHECK(bow.dtm.vocab.terms() == expected);
}

TEST_CASE("config validation and too few documents") {
  CHECK_THROWS_AS(cfg(1, 10).validate(), LdaError);
  auto bad = cfg(2, 10);
  bad.burn_in = 10;
  CHECK_THROWS_AS(bad.validate(), LdaError);
  CHECK(cfg(4, 10).effective_alpha() == 0.25);
  // a single-document corpus has fewer documents than topics
  const auto single = toy({"x"}, {{0}});
  CHECK_THROWS_AS(fit(single, cfg(2, 10)), LdaError);
}

TEST_CASE("degenerate single-word corpus keeps the invariants") {
  const auto dtm = toy({"x"}, {{0}, {0}});
  const auto m = fit(dtm, cfg(2, 20));
  CHECK(testing::lda_counts_consistent(m, dtm));
  CHECK(m.topic_total(0) + m.topic_total(1) == 2);
  CHECK(perplexity(m, dtm) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("counts stay consistent after every sweep") {
  const auto dtm = synthetic::make_random_corpus(120, 40, 3, 20, 4);
  int sweeps = 0;
  bool ok = true;
  const auto m = fit(dtm, cfg(5, 50, 3), [&](const LdaModel& s, int) {
    ++sweeps;
    ok = ok && testing::lda_counts_consistent(s, dtm);
    s.check_invariants(dtm);
  });
  CHECK(ok);
  CHECK(sweeps == 50);
  CHECK_NOTHROW(m.check_invariants(dtm));
}

TEST_CASE("fit is deterministic for a seed") {
  const auto dtm = synthetic::make_random_corpus(30, 20, 2, 10, 8);
  CHECK(fit(dtm, cfg(3, 30, 5)).assignments() == fit(dtm, cfg(3, 30, 5)).assignments());
  CHECK(fit(dtm, cfg(3, 30, 5)).assignments() != fit(dtm, cfg(3, 30, 6)).assignments());
}

TEST_CASE("from_assignments rejects malformed assignments") {
  const auto dtm = toy({"a", "b"}, {{0, 1}});
  CHECK_THROWS_AS(LdaModel::from_assignments(dtm, cfg(2, 1), {{0}}), LdaError);
  CHECK_THROWS_AS(LdaModel::from_assignments(dtm, cfg(2, 1), {{0, 2}}), LdaError);
}

TEST_CASE("phi and theta match hand-computed smoothing") {
  // topic 0 holds a,a,b; topic 1 holds b,c,c,c
  const auto dtm = toy({"a", "b", "c"}, {{0, 0, 1, 1, 2, 2, 2}});
  auto c = cfg(2, 1);
  c.alpha = 0.5;
  c.beta = 0.5;
  const auto m = LdaModel::from_assignments(dtm, c, {{0, 0, 0, 1, 1, 1, 1}});
  const auto ph = phi(m);
  CHECK(ph(0, 0) == doctest::Approx(5.0 / 9).epsilon(1e-15));
  CHECK(ph(0, 1) == doctest::Approx(3.0 / 9).epsilon(1e-15));
  CHECK(ph(0, 2) == doctest::Approx(1.0 / 9).epsilon(1e-15));
  CHECK(ph(1, 0) == doctest::Approx(1.0 / 11).epsilon(1e-15));
  CHECK(ph(1, 1) == doctest::Approx(3.0 / 11).epsilon(1e-15));
  CHECK(ph(1, 2) == doctest::Approx(7.0 / 11).epsilon(1e-15));
  const auto th = theta(m);
  CHECK(th(0, 0) == doctest::Approx(3.5 / 8).epsilon(1e-15));
  CHECK(th(0, 1) == doctest::Approx(4.5 / 8).epsilon(1e-15));
}

TEST_CASE("phi and theta rows are distributions") {
  const auto dtm = synthetic::make_random_corpus(40, 25, 2, 15, 2);
  const auto m = fit(dtm, cfg(4, 20));
  for (const auto& mat : {phi(m), theta(m)}) {
    for (std::size_t r = 0; r < mat.rows(); ++r) {
      double s = 0;
      for (double x : mat.row(r)) s += x;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("uniform counts give uniform rows and perplexity V") {
  // every word appears twice per document, once in each topic
  const std::size_t v = 6;
  std::vector<std::vector<int>> docs(3), z(3);
  for (auto d = 0; d < 3; ++d)
    for (std::size_t w = 0; w < v; ++w)
      for (int t = 0; t < 2; ++t) {
        docs[static_cast<std::size_t>(d)].push_back(static_cast<int>(w));
        z[static_cast<std::size_t>(d)].push_back(t);
      }
  const auto dtm = toy({"a", "b", "c", "d", "e", "f"}, docs);
  const auto m = LdaModel::from_assignments(dtm, cfg(2, 1), z);
  const auto ph = phi(m);
  for (std::size_t w = 0; w < v; ++w) CHECK(ph(0, w) == doctest::Approx(1.0 / v).epsilon(1e-15));
  CHECK(perplexity(m, dtm) == doctest::Approx(static_cast<double>(v)).epsilon(1e-12));
  for (double s : saliency(m, dtm)) CHECK(std::abs(s) < 1e-15);
}

TEST_CASE("a topic-exclusive word is more salient than a spread one") {
  // "x" only in topic 0; "y" split evenly; same frequency
  const auto dtm = toy({"x", "y", "z"}, {{0, 0, 1, 1, 2, 2}});
  const auto m = LdaModel::from_assignments(dtm, cfg(2, 1), {{0, 0, 0, 1, 1, 1}});
  const auto s = saliency(m, dtm);
  CHECK(s[0] > s[1]);
}

TEST_CASE("saliency and its ranking match a direct oracle on a planted corpus") {
  const auto planted = synthetic::make_planted_corpus(2, 10, 200, 40, 0.5, 3);
  const auto m = fit(planted.dtm, cfg(2, 200, 3));
  const auto got = saliency(m, planted.dtm);
  const auto want = saliency_oracle(m, planted.dtm);
  REQUIRE(got.size() == want.size());
  for (std::size_t w = 0; w < got.size(); ++w) CHECK(got[w] == doctest::Approx(want[w]).epsilon(1e-12));

  std::vector<std::pair<std::string, double>> ranked;
  for (std::size_t w = 0; w < want.size(); ++w) ranked.emplace_back(planted.dtm.vocab.term(static_cast<int>(w)), want[w]);
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  const auto top = saliency_rank(m, planted.dtm, 5);
  REQUIRE(top.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(top[i].first == ranked[i].first);
  CHECK(saliency_rank(m, planted.dtm, 1000).size() == planted.dtm.vocab_size());
}

TEST_CASE("planted topics are recovered on the committed seeds") {
  int recovered = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto planted = synthetic::make_planted_corpus(2, 10, 200, 50, 0.5, seed);
    const auto m = fit(planted.dtm, cfg(2, 500, seed));
    if (testing::best_permutation_min_cosine(phi(m), planted.true_phi) >= 0.8) ++recovered;
  }
  CHECK(recovered >= 4);
}

TEST_CASE("perplexity falls between sweep 10 and sweep 500") {
  double early = 0, late = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto planted = synthetic::make_planted_corpus(2, 10, 200, 50, 0.5, seed);
    fit(planted.dtm, cfg(2, 500, seed), [&](const LdaModel& s, int sweep) {
      if (sweep == 10) early += perplexity(s, planted.dtm);
      if (sweep == 500) late += perplexity(s, planted.dtm);
    });
  }
  CHECK(late < early);
}

TEST_CASE("summaries: contributions, term lists and report order") {
  const auto dtm = synthetic::make_random_corpus(50, 40, 5, 15, 12);
  const auto m = fit(dtm, cfg(5, 40, 2));
  const auto topics = summarize(m, dtm, {"first", "second"});
  REQUIRE(topics.size() == 5);
  double total = 0;
  for (const auto& t : topics) {
    total += t.token_contribution;
    CHECK(t.top_terms.size() == kTopTerms);
    CHECK(t.salient_terms.size() == kSalientTerms);
    CHECK(t.token_contribution == doctest::Approx(100.0 * static_cast<double>(m.topic_total(t.topic_id)) /
                                                  static_cast<double>(m.num_tokens())).epsilon(1e-15));
  }
  CHECK(total == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(topics[0].name == "first");
  CHECK(topics[2].name.empty());

  // report lists topics by descending contribution
  std::vector<TopicSummary> shaped(5);
  const double pct[] = {11.7, 33.5, 11.6, 22.9, 20.3};
  for (int i = 0; i < 5; ++i) {
    shaped[static_cast<std::size_t>(i)].topic_id = i;
    shaped[static_cast<std::size_t>(i)].token_contribution = pct[i];
  }
  std::ostringstream rep, pie;
  write_topic_report(rep, shaped);
  write_pie_data(pie, shaped);
  CHECK(pie.str() == "topic_id,percentage\n2,33.5\n4,22.9\n5,20.3\n1,11.7\n3,11.6\n");
  const auto r = rep.str();
  CHECK(r.find("33.5%") < r.find("22.9%"));
  CHECK(r.find("20.3%") < r.find("11.7%"));
  CHECK(r.find("11.7%") < r.find("11.6%"));
}

TEST_CASE("a single topic holds every token") {
  const auto dtm = toy({"a", "b"}, {{0, 1, 1}});
  auto c = cfg(2, 1);
  c.k = 1;
  const auto m = LdaModel::from_assignments(dtm, c, {{0, 0, 0}});
  const auto topics = summarize(m, dtm);
  REQUIRE(topics.size() == 1);
  CHECK(topics[0].token_contribution == 100.0);
}
