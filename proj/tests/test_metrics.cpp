#include <doctest.h>

#include <sstream>

#include "moodshift/metrics.hpp"
#include "moodshift/random.hpp"
#include "support.hpp"

using namespace moodshift;
using L = SentimentLabel;

namespace {

// Per-class counts chosen so every cell of the fine-tuned RoBERTa block
// rounds to the target percentage.
ConfusionMatrix finetuned_roberta_fixture() {
  ConfusionMatrix cm;
  cm.counts = {{{58, 2, 15}, {20, 43, 0}, {9, 11, 27}}};
  return cm;
}

}  // namespace

TEST_CASE("confusion tallies gold rows and predicted columns") {
  const std::vector<L> g = {L::Negative, L::Neutral, L::Positive};
  const auto id = confusion(g, g);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(id.counts[i][j] == (i == j ? 1u : 0u));

  const std::vector<L> gg = {L::Negative, L::Negative}, pp = {L::Positive, L::Positive};
  CHECK(confusion(gg, pp).counts[0][2] == 2);

  const std::vector<L> one = {L::Neutral};
  try {
    confusion(g, one);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('1') != std::string::npos);
  }
}

TEST_CASE("confusion matches a tally oracle on random pairs") {
  Rng rng(5);
  std::vector<L> g, p;
  std::array<std::array<std::uint64_t, 3>, 3> tally{};
  for (int i = 0; i < 200; ++i) {
    g.push_back(label_from_index(rng.below(3)));
    p.push_back(label_from_index(rng.below(3)));
    ++tally[label_index(g.back())][label_index(p.back())];
  }
  CHECK(confusion(g, p).counts == tally);
}

TEST_CASE("perfect diagonal scores one everywhere") {
  ConfusionMatrix cm;
  cm.counts = {{{4, 0, 0}, {0, 5, 0}, {0, 0, 6}}};
  const auto r = evaluate(cm, "p");
  for (const auto& c : r.per_class) {
    CHECK(c.precision == 1.0);
    CHECK(c.recall == 1.0);
    CHECK(c.f1 == 1.0);
  }
  CHECK(r.overall_f1 == 1.0);
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("empty matrix is rejected and empty classes are flagged") {
  CHECK_THROWS_AS(evaluate(ConfusionMatrix{}, "z"), std::invalid_argument);
  ConfusionMatrix cm;
  cm.counts = {{{3, 0, 0}, {0, 2, 0}, {0, 0, 0}}};
  const auto r = evaluate(cm, "z");
  CHECK(r.per_class[2].zero_division);
  CHECK(r.per_class[2].f1 == 0.0);
  const std::array<EvalReport, 1> one{r};
  CHECK(render_table(one).find("note: empty class Positive") != std::string::npos);
}

TEST_CASE("evaluate matches the definitional oracle on random matrices") {
  Rng rng(2024);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) worst = std::max(worst, testing::metrics_discrepancy(testing::random_matrix(rng)));
  CHECK(worst <= 1e-12);
}

TEST_CASE("macro averaging is unweighted") {
  const auto cm = finetuned_roberta_fixture();
  const auto r = evaluate(cm, "m", Averaging::Macro);
  double f = 0;
  for (const auto& c : r.per_class) f += c.f1;
  CHECK(r.overall_f1 == doctest::Approx(f / 3).epsilon(1e-15));
}

TEST_CASE("percent rounds half up") {
  CHECK(percent(0.685) == 69);
  CHECK(percent(0.684999) == 68);
  CHECK(percent(23.0 / 40.0) == 58);
  CHECK(percent(1.0) == 100);
  CHECK(percent(0.0) == 0);
}

TEST_CASE("fine-tuned RoBERTa block renders byte for byte") {
  const std::array<EvalReport, 1> r{evaluate(finetuned_roberta_fixture(), "Fine-tuned RoBERTa")};
  const std::string expected =
      "Fine-tuned RoBERTa\n"
      "Class      Negative  Neutral Positive   All\n"
      "Precision        67       77       64    70\n"
      "Recall           77       68       57    69\n"
      "F1-score         72       72       61    69\n"
      "Accuracy                                 69\n";
  CHECK(render_table(r) == expected);
}

TEST_CASE("perfect report renders all hundreds and blocks keep input order") {
  ConfusionMatrix cm;
  cm.counts = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const std::array<EvalReport, 2> rs{evaluate(cm, "first"), evaluate(finetuned_roberta_fixture(), "second")};
  const auto text = render_table(rs);
  CHECK(text.find("Precision       100      100      100   100\n") != std::string::npos);
  CHECK(text.find("first") < text.find("second"));
  CHECK(text.find("\n\nsecond\n") != std::string::npos);
}

TEST_CASE("prediction files round-trip") {
  const std::vector<PredictionRow> rows = {{"a", L::Negative, L::Positive}, {"b", L::Neutral, L::Neutral}};
  std::ostringstream out;
  write_predictions(out, rows);
  CHECK(out.str() == "a\tnegative\tpositive\nb\tneutral\tneutral\n");
  std::istringstream in(out.str());
  const auto back = read_predictions(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].tweet_id == "a");
  CHECK(back[0].pred == L::Positive);
  std::istringstream bad("a\tnegative\n");
  CHECK_THROWS(read_predictions(bad));
}
