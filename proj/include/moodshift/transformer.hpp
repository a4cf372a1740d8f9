#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "moodshift/kernels.hpp"
#include "moodshift/label.hpp"

namespace moodshift::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t max_len = 64;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 128;
  std::size_t n_classes = kNumLabels;
  double dropout_rate = 0.0;

  /// Throws std::invalid_argument when d_model % n_heads != 0, max_len < 2,
  /// n_classes != 3 or a size is zero.
  void validate() const;
  bool operator==(const TransformerConfig&) const = default;
};

/// A named dense tensor of 64-bit floats, row-major.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t numel() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

/// All trainable tensors in a fixed order:
///   embedding [V,d]
///   layer{i}.{wq,wk,wv,wo} [d,d] and {bq,bk,bv,bo} [d]
///   layer{i}.ln1.{gamma,beta} [d], layer{i}.ff1.w [d,f], ff1.b [f],
///   layer{i}.ff2.w [f,d], ff2.b [d], layer{i}.ln2.{gamma,beta} [d]
///   head.w [d,3], head.b [3]
/// Positions use fixed sinusoidal encodings and are not parameters.
class Parameters {
 public:
  Parameters() = default;
  /// Zero-filled tensors laid out for cfg (layer norm gains included).
  static Parameters zeros(const TransformerConfig& cfg);
  /// Xavier-uniform matrices, unit-variance uniform embeddings, zero
  /// biases, unit layer-norm gains.
  static Parameters initialize(const TransformerConfig& cfg, std::uint64_t seed);

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t count() const;

  /// Throws ShapeError naming the first tensor whose name or shape does not
  /// match the layout for cfg.
  void check_layout(const TransformerConfig& cfg) const;

  void set_zero();
  /// this += other (same layout).
  void add(const Parameters& other);
  void scale(double s);

  bool operator==(const Parameters&) const = default;

 private:
  std::vector<Tensor> tensors_;
};

/// One encoded sequence: ids padded to max_len; mask marks real tokens and
/// must be a prefix of ones.
struct EncodedText {
  std::vector<int> ids;
  std::vector<std::uint8_t> mask;
};

/// Logits for one sequence. Only the masked-in prefix is processed, so
/// padding never influences the result.
std::array<double, kNumLabels> forward_one(const TransformerConfig& cfg, const Parameters& params,
                                           const EncodedText& x);

/// batch x 3 logits, rows in input order.
std::vector<std::array<double, kNumLabels>> forward(const TransformerConfig& cfg, const Parameters& params,
                                                    std::span<const EncodedText> batch,
                                                    kernels::Execution exec = kernels::Execution::Parallel);

struct LossAndGrad {
  double loss = 0.0;  // mean cross-entropy
  Parameters grads;
  std::vector<std::array<double, kNumLabels>> logits;
};

/// Dropout masks are drawn from dropout_seed when cfg.dropout_rate > 0 (pass
/// a fresh seed per step). Gradients are computed per example and summed in
/// batch order, so Serial and Parallel agree bit for bit.
LossAndGrad loss_and_grad(const TransformerConfig& cfg, const Parameters& params, std::span<const EncodedText> batch,
                          std::span<const SentimentLabel> gold,
                          kernels::Execution exec = kernels::Execution::Parallel, std::uint64_t dropout_seed = 0);

/// Row-wise softmax.
std::array<double, kNumLabels> softmax(const std::array<double, kNumLabels>& logits);

}  // namespace moodshift::nn
