#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "moodshift/corpus.hpp"
#include "moodshift/kernels.hpp"
#include "moodshift/transformer.hpp"
#include "moodshift/vocab.hpp"

namespace moodshift::nn {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr std::array<std::string_view, 3> kReservedTokens = {"[PAD]", "[UNK]", "[CLS]"};

/// Sentiment tokens mapped to lookup keys: words lowercased with edge
/// punctuation stripped, emoji and '!'/'?' runs kept as they are.
std::vector<std::string> classifier_tokens(std::string_view text);

/// Reserved tokens first, then the most frequent tokens (frequency
/// descending, ties lexicographic) until max_size entries. The per-term count
/// is the token frequency. Throws std::invalid_argument when max_size < 3 or
/// the dataset is empty.
Vocab build_vocab(const Dataset& ds, std::size_t max_size);

/// [CLS] + token ids (unknown -> [UNK]), truncated or padded with [PAD] to
/// max_len.
EncodedText encode(std::string_view text, const Vocab& vocab, std::size_t max_len);

enum class Optimizer { Sgd, Adam };
Optimizer parse_optimizer(std::string_view name);
std::string_view optimizer_name(Optimizer o);

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t batch_size = 16;
  int epochs = 10;
  double weight_decay = 0.0;  // L2 term added to the gradient
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;

  /// Throws std::invalid_argument for a non-positive rate or batch size, or
  /// negative epochs.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct TrainStage {
  std::string corpus;
  TrainConfig config;
  double final_loss = 0.0;

  bool operator==(const TrainStage&) const = default;
};

struct Checkpoint {
  TransformerConfig config;
  Vocab vocab;
  Parameters params;
  std::vector<TrainStage> provenance;  // oldest first

  std::vector<std::string> corpora() const;
  bool operator==(const Checkpoint&) const = default;
};

/// Fresh checkpoint; cfg.vocab_size is replaced by vocab.size().
Checkpoint init_checkpoint(const Vocab& vocab, TransformerConfig cfg, std::uint64_t seed);

struct EpochStats {
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // from the logits seen before each step
};

using TrainHistory = std::vector<EpochStats>;

struct TrainResult {
  Checkpoint checkpoint;
  TrainHistory history;
};

/// Shuffled mini-batches each epoch, one optimizer step per batch (Adam
/// beta1 0.9, beta2 0.999, eps 1e-8). Appends a provenance stage when
/// epochs > 0; epochs == 0 returns init unchanged. Throws CorpusError on an
/// unlabelled item.
TrainResult train(const Checkpoint& init, const Dataset& ds, const TrainConfig& tc);

class ArchitectureMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// train() from pretrained parameters with the pretrained vocabulary. When
/// `expected` is given its architecture must match the checkpoint
/// (vocab_size 0 means "any"); otherwise ArchitectureMismatch names the
/// field.
TrainResult fine_tune(const Checkpoint& pretrained, const Dataset& ds, const TrainConfig& tc,
                      const std::optional<TransformerConfig>& expected = std::nullopt);

/// Argmax; ties go to the lower label index.
SentimentLabel argmax_label(const std::array<double, kNumLabels>& scores);

struct Predictions {
  std::vector<SentimentLabel> labels;
  std::vector<std::array<double, kNumLabels>> probabilities;
};

/// Input order is preserved regardless of execution mode.
Predictions predict(const Checkpoint& ckpt, const Dataset& ds,
                    kernels::Execution exec = kernels::Execution::Parallel);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary container, see docs/checkpoint_format.md.
void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint load_checkpoint(std::istream& in);
void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace moodshift::nn
