#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "moodshift/config.hpp"
#include "moodshift/corpus.hpp"
#include "moodshift/lda.hpp"
#include "moodshift/metrics.hpp"
#include "moodshift/nnclassifier.hpp"
#include "moodshift/topic_shift.hpp"

namespace moodshift {

/// Items whose prediction differs from the gold label, in input order.
/// Named "<ds.name()>-misclassified". Throws std::invalid_argument on a
/// length mismatch and CorpusError on an unlabelled item.
Dataset misclassified(std::span<const SentimentLabel> preds, const Dataset& ds);

struct ExperimentConfig {
  std::string source_corpus;
  std::string target_corpus;
  std::optional<std::string> source_checkpoint;  // skip source training when set
  std::string stopwords;
  std::string output_dir;
  std::uint64_t seed = 0;  // model initialisation
  SplitSpec split;
  nn::TransformerConfig model_cfg;
  std::size_t max_vocab = 5000;
  nn::TrainConfig train_cfg;
  nn::TrainConfig finetune_cfg;
  lda::LdaConfig lda_cfg;
  std::size_t min_df = 1;
  std::vector<std::string> topic_names_pre;
  std::vector<std::string> topic_names_post;
  double match_threshold = 0.3;
  bool symmetric_bases = false;

  /// Canonical `section.key = value` listing, used for the run manifest.
  std::vector<std::pair<std::string, std::string>> resolved() const;
};

/// Reads an INI experiment file. Relative paths resolve against the file's
/// directory. Seeds not given per section default to [experiment] seed.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const IniFile& ini);
/// Sets every seed (init, split, train, fine-tune, LDA) to `seed`.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

struct MisclassifiedSet {
  std::string name;
  std::size_t size = 0;
  std::string base;  // provenance of the evaluated set
  std::size_t base_size = 0;
};

struct LdaRun {
  std::vector<lda::TopicSummary> topics;
  int k_used = 0;  // may be below the configured K for tiny sets
  std::size_t docs = 0;
  std::size_t dropped_docs = 0;
  std::size_t tokens = 0;
  double perplexity = 0.0;
  std::string note;  // set when the fit was clamped or skipped
};

struct ExperimentReport {
  std::string source_name;
  std::size_t source_size = 0;
  std::string target_name;
  std::size_t target_size = 0;
  std::size_t train_size = 0;  // target train split
  std::size_t test_size = 0;   // target test split
  EvalReport zero_shot_full;  // zero-shot on the full target set
  EvalReport zero_shot;       // zero-shot on the target test split
  EvalReport fine_tuned;      // fine-tuned on the target test split
  double delta_f1 = 0.0;      // fine_tuned.overall_f1 - zero_shot.overall_f1
  MisclassifiedSet misclassified_pre;
  MisclassifiedSet misclassified_post;
  LdaRun lda_pre;
  LdaRun lda_post;
  TopicComparison topic_comparison;
  std::vector<std::string> provenance;  // corpora chain of the fine-tuned checkpoint
};

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& msg)
      : std::runtime_error("stage " + stage + ": " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Full pipeline. Every intermediate artifact is written under
/// cfg.output_dir; a failing stage throws StageError and leaves earlier
/// outputs in place.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// LDA over a (possibly tiny) dataset; clamps K to the document count and
/// returns an empty run with a note when nothing is left to model.
LdaRun run_lda(const Dataset& ds, const std::set<std::string, std::less<>>& stopwords, std::size_t min_df,
               const lda::LdaConfig& cfg, const std::vector<std::string>& names);

std::string render_report(const ExperimentReport& r);
/// `key=value` lines.
std::string render_report_lines(const ExperimentReport& r);

}  // namespace moodshift
