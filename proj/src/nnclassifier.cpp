#include "moodshift/nnclassifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "moodshift/baselines.hpp"
#include "moodshift/random.hpp"

namespace moodshift::nn {

std::vector<std::string> classifier_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& tok : tokenize_sentiment(text)) {
    auto key = lexicon_key(tok);
    if (!key.empty()) out.push_back(std::move(key));
  }
  return out;
}

Vocab build_vocab(const Dataset& ds, std::size_t max_size) {
  if (max_size < kReservedTokens.size())
    throw std::invalid_argument("build_vocab: max_size must be at least " + std::to_string(kReservedTokens.size()));
  if (ds.empty()) throw std::invalid_argument("build_vocab: empty dataset");
  std::map<std::string, std::uint64_t> freq;
  for (const auto& item : ds)
    for (auto& t : classifier_tokens(item.tweet.text)) ++freq[t];
  for (auto r : kReservedTokens) freq.erase(std::string(r));

  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocab v;
  for (auto r : kReservedTokens) v.add(std::string(r));
  for (auto& [term, n] : ranked) {
    if (v.size() >= max_size) break;
    v.add(term, n);
  }
  return v;
}

EncodedText encode(std::string_view text, const Vocab& vocab, std::size_t max_len) {
  EncodedText e;
  e.ids.assign(max_len, kPadId);
  e.mask.assign(max_len, 0);
  if (max_len == 0) return e;
  e.ids[0] = kClsId;
  e.mask[0] = 1;
  std::size_t pos = 1;
  for (const auto& t : classifier_tokens(text)) {
    if (pos >= max_len) break;
    e.ids[pos] = vocab.find(t).value_or(kUnkId);
    e.mask[pos] = 1;
    ++pos;
  }
  return e;
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "adam") return Optimizer::Adam;
  if (name == "sgd") return Optimizer::Sgd;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

std::string_view optimizer_name(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be non-negative");
  if (!std::isfinite(weight_decay) || weight_decay < 0.0)
    throw std::invalid_argument("TrainConfig: weight_decay must be non-negative");
}

std::vector<std::string> Checkpoint::corpora() const {
  std::vector<std::string> out;
  for (const auto& s : provenance) out.push_back(s.corpus);
  return out;
}

Checkpoint init_checkpoint(const Vocab& vocab, TransformerConfig cfg, std::uint64_t seed) {
  cfg.vocab_size = vocab.size();
  cfg.validate();
  Checkpoint c;
  c.config = cfg;
  c.vocab = vocab;
  c.params = Parameters::initialize(cfg, seed);
  return c;
}

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct AdamState {
  Parameters m, v;
  std::uint64_t step = 0;
};

void apply_step(Parameters& params, Parameters& grads, const TrainConfig& tc, AdamState& st) {
  auto& pt = params.tensors();
  auto& gt = grads.tensors();
  if (tc.weight_decay > 0.0) {
    for (std::size_t i = 0; i < pt.size(); ++i)
      for (std::size_t j = 0; j < pt[i].values.size(); ++j) gt[i].values[j] += tc.weight_decay * pt[i].values[j];
  }
  if (tc.optimizer == Optimizer::Sgd) {
    for (std::size_t i = 0; i < pt.size(); ++i)
      for (std::size_t j = 0; j < pt[i].values.size(); ++j) pt[i].values[j] -= tc.learning_rate * gt[i].values[j];
    return;
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.step));
  auto& mt = st.m.tensors();
  auto& vt = st.v.tensors();
  for (std::size_t i = 0; i < pt.size(); ++i) {
    for (std::size_t j = 0; j < pt[i].values.size(); ++j) {
      const double g = gt[i].values[j];
      double& m = mt[i].values[j];
      double& v = vt[i].values[j];
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g * g;
      pt[i].values[j] -= tc.learning_rate * (m / c1) / (std::sqrt(v / c2) + kAdamEps);
    }
  }
}

}  // namespace

TrainResult train(const Checkpoint& init, const Dataset& ds, const TrainConfig& tc) {
  tc.validate();
  init.config.validate();
  init.params.check_layout(init.config);
  const auto gold = ds.gold_labels();
  TrainResult res{init, {}};
  if (tc.epochs == 0) return res;
  if (ds.empty()) throw std::invalid_argument("train: empty dataset");

  std::vector<EncodedText> encoded;
  encoded.reserve(ds.size());
  for (const auto& item : ds) encoded.push_back(encode(item.tweet.text, init.vocab, init.config.max_len));

  Checkpoint& ck = res.checkpoint;
  AdamState adam{Parameters::zeros(ck.config), Parameters::zeros(ck.config), 0};
  Rng rng(tc.seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      std::vector<EncodedText> batch;
      std::vector<SentimentLabel> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(encoded[order[i]]);
        labels.push_back(gold[order[i]]);
      }
      const std::uint64_t dropout_seed = tc.seed ^ (0xD1B54A32D192ED03ULL * ++step);
      auto lg = loss_and_grad(ck.config, ck.params, batch, labels, kernels::Execution::Parallel, dropout_seed);
      loss_sum += lg.loss * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i)
        if (argmax_label(lg.logits[i]) == labels[i]) ++correct;
      apply_step(ck.params, lg.grads, tc, adam);
    }
    const double n = static_cast<double>(order.size());
    res.history.push_back({loss_sum / n, static_cast<double>(correct) / n});
  }
  ck.provenance.push_back({ds.name(), tc, res.history.back().mean_loss});
  return res;
}

TrainResult fine_tune(const Checkpoint& pretrained, const Dataset& ds, const TrainConfig& tc,
                      const std::optional<TransformerConfig>& expected) {
  if (expected) {
    const auto& a = pretrained.config;
    const auto& b = *expected;
    auto check = [](const char* field, std::size_t have, std::size_t want) {
      if (have != want)
        throw ArchitectureMismatch(std::string("fine_tune: checkpoint ") + field + " is " + std::to_string(have) +
                                   ", requested " + std::to_string(want));
    };
    if (b.vocab_size != 0) check("vocab_size", a.vocab_size, b.vocab_size);
    check("max_len", a.max_len, b.max_len);
    check("d_model", a.d_model, b.d_model);
    check("n_heads", a.n_heads, b.n_heads);
    check("n_layers", a.n_layers, b.n_layers);
    check("d_ff", a.d_ff, b.d_ff);
    check("n_classes", a.n_classes, b.n_classes);
  }
  return train(pretrained, ds, tc);
}

SentimentLabel argmax_label(const std::array<double, kNumLabels>& scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumLabels; ++k)
    if (scores[k] > scores[best]) best = k;
  return label_from_index(best);
}

Predictions predict(const Checkpoint& ckpt, const Dataset& ds, kernels::Execution exec) {
  std::vector<EncodedText> encoded;
  encoded.reserve(ds.size());
  for (const auto& item : ds) encoded.push_back(encode(item.tweet.text, ckpt.vocab, ckpt.config.max_len));
  const auto logits = forward(ckpt.config, ckpt.params, encoded, exec);
  Predictions p;
  p.labels.reserve(logits.size());
  p.probabilities.reserve(logits.size());
  for (const auto& l : logits) {
    p.labels.push_back(argmax_label(l));
    p.probabilities.push_back(softmax(l));
  }
  return p;
}

}  // namespace moodshift::nn
