// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <string>

#include "annotation_fuzz.hpp"
#include "moodshift/baselines.hpp"
#include "moodshift/experiment.hpp"
#include "moodshift/synthetic.hpp"
#include "moodshift/topic_shift.hpp"
#include "support.hpp"

using namespace moodshift;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && s >= limit_s) {
    o.pass = false;
    o.detail += " (over time limit)";
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), s, o.detail.c_str());
  std::fflush(stdout);
}

lda::LdaConfig lda_cfg(int k, int iterations, std::uint64_t seed) {
  lda::LdaConfig c;
  c.k = k;
  c.iterations = iterations;
  c.burn_in = 0;
  c.seed = seed;
  return c;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int main() {
  criterion("metrics-oracle", 5, [] {
    Rng rng(2024);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) worst = std::max(worst, testing::metrics_discrepancy(testing::random_matrix(rng)));
    return Outcome{worst <= 1e-12, fmt("max |diff| %.3g over 1000 matrices", worst)};
  });

  criterion("table-format-golden", 0, [] {
    ConfusionMatrix cm;
    cm.counts = {{{58, 2, 15}, {20, 43, 0}, {9, 11, 27}}};
    const std::array<EvalReport, 1> r{evaluate(cm, "Fine-tuned RoBERTa")};
    const std::string expected =
        "Fine-tuned RoBERTa\n"
        "Class      Negative  Neutral Positive   All\n"
        "Precision        67       77       64    70\n"
        "Recall           77       68       57    69\n"
        "F1-score         72       72       61    69\n"
        "Accuracy                                 69\n";
    return Outcome{render_table(r) == expected, "overall 70 / 69 / 69"};
  });

  criterion("lda-count-conservation", 60, [] {
    const auto dtm = synthetic::make_random_corpus(500, 300, 5, 30, 11);
    int sweeps = 0, bad = 0;
    lda::fit(dtm, lda_cfg(10, 1000, 11), [&](const lda::LdaModel& m, int) {
      ++sweeps;
      if (!testing::lda_counts_consistent(m, dtm)) ++bad;
    });
    return Outcome{sweeps == 1000 && bad == 0,
                   std::to_string(sweeps) + " sweeps, " + std::to_string(bad) + " inconsistent"};
  });

  criterion("planted-topic-recovery", 60, [] {
    int recovered = 0;
    std::string cos;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto planted = synthetic::make_planted_corpus(2, 10, 200, 50, 0.5, seed);
      const auto m = lda::fit(planted.dtm, lda_cfg(2, 500, seed));
      const double c = testing::best_permutation_min_cosine(lda::phi(m), planted.true_phi);
      recovered += c >= 0.8;
      cos += fmt(" %.3f", c);
    }
    return Outcome{recovered >= 4, std::to_string(recovered) + "/5 seeds, min cosine" + cos};
  });

  criterion("gradient-check", 30, [] {
    const auto g = testing::gradient_check(5);
    return Outcome{g.max_rel_error < 1e-4, fmt("max rel error %.3g", g.max_rel_error) + " at " + g.worst_tensor +
                                               " over " + std::to_string(g.checked) + " params"};
  });

  criterion("domain-transfer-delta", 300, [] {
    const auto dir = fs::temp_directory_path() / "moodshift_acceptance_transfer";
    fs::remove_all(dir);
    auto cfg = load_experiment_config(testing::fixture("experiment.ini"));
    cfg.output_dir = dir.string();
    const auto r = run_experiment(cfg);
    fs::remove_all(dir);
    return Outcome{r.delta_f1 >= 0.08, fmt("zero-shot %.4f", r.zero_shot.overall_f1) +
                                           fmt(" fine-tuned %.4f", r.fine_tuned.overall_f1) +
                                           fmt(" delta %+.4f", r.delta_f1)};
  });

  criterion("baseline-golden-suite", 0, [] {
    const auto lex = Lexicon::load_file(testing::data_file("lexicon.tsv"));
    const RuleConfig rc;
    int matches = 0;
    const auto cases = testing::load_calibration_cases(testing::data_file("calibration_cases.tsv"));
    for (const auto& c : cases) matches += classify_text(c.text, lex, rc, BaselineEngine::Lexicon) == c.vader;
    const auto pray = classify_text("WHO is doing a great job. Let's support them!! \xF0\x9F\x99\x8F", lex, rc,
                                    BaselineEngine::Lexicon);
    const auto rofl = classify_text(
        "WHO is doing a great job. Let's support them!! \xF0\x9F\xA4\xA3\xF0\x9F\xA4\xA3\xF0\x9F\xA4\xA3\xF0\x9F\xA4\xA3",
        lex, rc, BaselineEngine::Lexicon);
    const bool pair = pray == SentimentLabel::Positive && rofl == pray;
    return Outcome{matches >= 10 && pair, std::to_string(matches) + "/" + std::to_string(cases.size()) +
                                              " match, emoji pair " + (pair ? "identical Positive" : "differs")};
  });

  criterion("topic-shift-fixture", 0, [] {
    const auto f = testing::load_topic_fixture(testing::fixture("topic_shift_topics.tsv"));
    const auto c = topic_shift(f.pre, f.post, 0.3);
    std::set<std::string> names;
    std::string listed;
    for (const auto& s : c.surviving) {
      names.insert(s.pre.name);
      listed += (listed.empty() ? "" : ", ") + s.pre.name;
    }
    const std::set<std::string> want = {"Vaccine Safety and Availability Concerns",
                                        "Conspiracy Theories about the M-pox Outbreak"};
    const bool ok = names == want && c.disappeared.size() == 3 && c.emergent.size() == 3;
    return Outcome{ok, "surviving {" + listed + "}, " + std::to_string(c.disappeared.size()) + " disappeared, " +
                           std::to_string(c.emergent.size()) + " emergent"};
  });

  criterion("annotation-replay-fuzz", 0, [] {
    const auto log = (fs::temp_directory_path() / "moodshift_acceptance_fuzz.log").string();
    const auto o = testing::fuzz_annotation_log(10000, 99, log);
    fs::remove(log);
    return Outcome{o.events == 10000 && o.mismatches == 0 && o.reload_matches,
                   std::to_string(o.events) + " events, " + std::to_string(o.checks) + " checks, " +
                       std::to_string(o.mismatches) + " mismatches, log " + std::to_string(o.log_size) +
                       (o.reload_matches ? ", reload matches" : ", reload differs")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
