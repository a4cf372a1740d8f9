#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "moodshift/experiment.hpp"
#include "moodshift/random.hpp"
#include "moodshift/synthetic.hpp"
#include "support.hpp"

using namespace moodshift;
namespace fs = std::filesystem;
using L = SentimentLabel;

namespace {

Dataset labelled(std::size_t n) {
  Dataset ds("m");
  for (std::size_t i = 0; i < n; ++i) {
    LabeledTweet it;
    it.tweet.id = std::to_string(i);
    it.tweet.text = "t" + std::to_string(i);
    it.label = label_from_index(i % 3);
    ds.add(it);
  }
  return ds;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("moodshift_exp_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("misclassified keeps wrong items in order") {
  const auto ds = labelled(9);
  const auto gold = ds.gold_labels();
  CHECK(misclassified(gold, ds).empty());
  std::vector<L> wrong;
  for (auto g : gold) wrong.push_back(label_from_index((label_index(g) + 1) % 3));
  const auto all = misclassified(wrong, ds);
  CHECK(all.size() == 9);
  CHECK(all.name() == "m-misclassified");

  Rng rng(4);
  std::vector<L> mixed;
  std::vector<std::string> expected;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    mixed.push_back(label_from_index(rng.below(3)));
    if (mixed.back() != gold[i]) expected.push_back(ds[i].tweet.id);
  }
  std::vector<std::string> got;
  for (const auto& it : misclassified(mixed, ds)) got.push_back(it.tweet.id);
  CHECK(got == expected);
  CHECK_THROWS_AS(misclassified(std::vector<L>{L::Neutral}, ds), std::invalid_argument);
}

TEST_CASE("experiment config parsing") {
  const auto cfg = load_experiment_config(testing::fixture("experiment.ini"));
  CHECK(fs::path(cfg.source_corpus).filename() == "domain_a.corpus");
  CHECK(fs::exists(cfg.source_corpus));
  CHECK(fs::exists(cfg.stopwords));
  CHECK(cfg.seed == 7);
  CHECK(cfg.split.seed == 7);
  CHECK(cfg.train_cfg.seed == 7);
  CHECK(cfg.lda_cfg.seed == 7);
  CHECK(cfg.model_cfg.max_len == 16);
  CHECK(cfg.split.test_fraction.num == 1);
  CHECK(cfg.split.test_fraction.den == 5);

  auto copy = cfg;
  override_seed(copy, 11);
  CHECK(copy.finetune_cfg.seed == 11);
  CHECK(copy.lda_cfg.seed == 11);

  CHECK_THROWS_AS(parse_experiment_config(IniFile::parse("[experiment]\ntarget_corpus = b\nstopwords = s\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(IniFile::parse("[experiment]\nsource_corpus = a\ntarget_corpus = b\n"
                                                         "stopwords = s\nbogus = 1\n")),
                  ConfigError);
}

TEST_CASE("run_lda clamps K and skips empty sets") {
  const std::set<std::string, std::less<>> none;
  lda::LdaConfig cfg;
  cfg.k = 5;
  cfg.iterations = 20;
  cfg.burn_in = 0;
  Dataset two("two");
  for (int i = 0; i < 2; ++i) {
    LabeledTweet it;
    it.tweet.id = std::to_string(i);
    it.tweet.text = "alpha beta gamma " + std::to_string(i);
    two.add(it);
  }
  const auto r = run_lda(two, none, 1, cfg, {});
  CHECK(r.k_used == 2);
  CHECK(r.topics.size() == 2);
  CHECK(!r.note.empty());
  const auto empty = run_lda(Dataset("e"), none, 1, cfg, {});
  CHECK(empty.topics.empty());
  CHECK(empty.k_used == 0);
  CHECK(!empty.note.empty());
}

TEST_CASE("a failing stage is named and earlier outputs remain") {
  const auto dir = scratch("fail");
  auto cfg = load_experiment_config(testing::fixture("experiment.ini"));
  cfg.output_dir = dir.string();
  cfg.target_corpus = (dir / "missing.corpus").string();
  try {
    run_experiment(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load-target");
  }
  fs::remove_all(dir);
}

TEST_CASE("degenerate transfer: source equals target") {
  const auto dir = scratch("same");
  const auto corpus = synthetic::make_transfer_corpus({synthetic::Domain::A, 90, 3, 0.5, 0.0}, "same");
  export_corpus_file(corpus, (dir / "same.corpus").string());
  auto cfg = load_experiment_config(testing::fixture("experiment.ini"));
  cfg.source_corpus = cfg.target_corpus = (dir / "same.corpus").string();
  cfg.output_dir = (dir / "out").string();
  cfg.model_cfg.d_model = 16;
  cfg.model_cfg.d_ff = 32;
  cfg.model_cfg.n_layers = 1;
  cfg.train_cfg.epochs = 4;
  cfg.finetune_cfg.epochs = 2;
  cfg.lda_cfg.iterations = 30;
  cfg.lda_cfg.burn_in = 0;
  cfg.symmetric_bases = true;
  const auto r = run_experiment(cfg);
  CHECK(std::isfinite(r.delta_f1));
  CHECK(r.delta_f1 == r.fine_tuned.overall_f1 - r.zero_shot.overall_f1);
  CHECK(r.misclassified_pre.base_size == r.test_size);
  REQUIRE(!r.provenance.empty());
  CHECK(r.provenance.front() == "same");
  for (const char* f : {"report.txt", "report.lines", "misclassified_pre.corpus", "misclassified_post.corpus",
                        "checkpoint_zero_shot", "checkpoint_finetuned", "predictions_zero_shot.tsv"})
    CHECK(fs::exists(dir / "out" / f));
  fs::remove_all(dir);
}

TEST_CASE("fixture experiment reproduces the committed report") {
  const auto dir = scratch("golden");
  auto cfg = load_experiment_config(testing::fixture("experiment.ini"));
  cfg.output_dir = dir.string();
  const auto r = run_experiment(cfg);

  CHECK(r.source_size == 600);
  CHECK(r.target_size == 300);
  CHECK(r.test_size == 60);
  CHECK(r.misclassified_pre.base_size == 300);
  CHECK(r.misclassified_post.base_size == 60);
  CHECK(r.delta_f1 >= 0.08);
  CHECK(r.delta_f1 == r.fine_tuned.overall_f1 - r.zero_shot.overall_f1);

  // pre/post topic partition
  CHECK(r.topic_comparison.surviving.size() + r.topic_comparison.disappeared.size() == r.lda_pre.topics.size());
  CHECK(r.topic_comparison.surviving.size() + r.topic_comparison.emergent.size() == r.lda_post.topics.size());

  const auto report = testing::slurp((dir / "report.txt").string());
  CHECK(report == render_report(r));
  CHECK(report == testing::slurp(testing::fixture("experiment_report.golden")));
  const auto lines = testing::slurp((dir / "report.lines").string());
  CHECK(lines.find("delta_f1=") != std::string::npos);
  fs::remove_all(dir);
}
