#include "moodshift/synthetic.hpp"

#include <array>
#include <cmath>
#include <string_view>

#include "moodshift/random.hpp"

namespace moodshift::synthetic {

namespace {

using Words = std::vector<std::string_view>;

const Words kPositiveCues = {"great", "love", "thanks", "hope", "glad", "happy", "proud", "grateful"};
const Words kNegativeCues = {"fear", "scared", "panic", "awful", "worried", "afraid", "terrible", "angry"};
const Words kShiftedCues = {"positive", "spreading", "rising", "wild"};
const Words kNeutralCues = {"update", "report", "news", "today", "says", "announced", "officials", "data"};
const Words kFiller = {"the", "is", "and", "so", "just", "this", "about", "now"};

const Words kTopicA = {"covid",  "vaccine", "lockdown", "masks",    "booster", "pfizer",   "moderna",
                       "variant", "omicron", "quarantine", "distancing", "jab",  "ventilator", "delta"};
const Words kTopicB = {"mpox",   "monkeypox", "lesions", "rash",  "smallpox", "jynneos", "orthopox",
                       "pustules", "tecovirimat", "blisters", "outbreak", "contacts", "clinic", "zoonotic"};

std::string_view pick(Rng& rng, const Words& w) { return w[rng.below(w.size())]; }

SentimentLabel draw_label(Rng& rng) {
  // roughly the class balance of the hand-labelled M-pox set
  const double u = rng.uniform01();
  if (u < 0.42) return SentimentLabel::Negative;
  if (u < 0.77) return SentimentLabel::Neutral;
  return SentimentLabel::Positive;
}

double draw_normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia-Tsang; shape < 1 uses the boost x * U^(1/shape).
double draw_gamma(Rng& rng, double shape) {
  if (shape < 1.0) return draw_gamma(rng, shape + 1.0) * std::pow(1.0 - rng.uniform01(), 1.0 / shape);
  const double d = shape - 1.0 / 3.0, c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = draw_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - rng.uniform01();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

std::size_t draw_categorical(Rng& rng, const std::vector<double>& p) {
  double u = rng.uniform01(), acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

}  // namespace

Dataset make_transfer_corpus(const TransferSpec& spec, const std::string& name) {
  Rng rng(spec.seed);
  const Words& topic = spec.domain == Domain::A ? kTopicA : kTopicB;
  Dataset ds(name);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const SentimentLabel label = draw_label(rng);
    std::vector<std::string> toks;
    const std::size_t n_topic = 2 + rng.below(3);
    for (std::size_t k = 0; k < n_topic; ++k) toks.emplace_back(pick(rng, topic));
    const std::size_t n_fill = rng.below(3);
    for (std::size_t k = 0; k < n_fill; ++k) toks.emplace_back(pick(rng, kFiller));

    switch (label) {
      case SentimentLabel::Positive:
        if (spec.domain == Domain::A && rng.uniform01() < 0.35) {
          toks.emplace_back(pick(rng, kShiftedCues));
        } else {
          toks.emplace_back(pick(rng, kPositiveCues));
          if (rng.uniform01() < 0.3) toks.emplace_back(pick(rng, kPositiveCues));
        }
        break;
      case SentimentLabel::Negative:
        if (spec.domain == Domain::B && rng.uniform01() < spec.shifted_rate) {
          toks.emplace_back(pick(rng, kShiftedCues));
        } else {
          toks.emplace_back(pick(rng, kNegativeCues));
          if (rng.uniform01() < 0.3) toks.emplace_back(pick(rng, kNegativeCues));
        }
        break;
      case SentimentLabel::Neutral:
        toks.emplace_back(pick(rng, kNeutralCues));
        break;
    }
    rng.shuffle(std::span<std::string>(toks));

    std::string text;
    for (const auto& t : toks) {
      if (!text.empty()) text += ' ';
      text += t;
    }
    if (label != SentimentLabel::Neutral && rng.uniform01() < 0.25) text += '!';

    SentimentLabel gold = label;
    if (rng.uniform01() < spec.label_noise) gold = label_from_index(rng.below(kNumLabels));

    LabeledTweet item;
    item.tweet.id = name + "-" + std::to_string(i);
    item.tweet.text = std::move(text);
    item.label = gold;
    ds.add(std::move(item));
  }
  return ds;
}

PlantedCorpus make_planted_corpus(int k, std::size_t words_per_topic, std::size_t docs, std::size_t doc_len,
                                  double doc_alpha, std::uint64_t seed) {
  if (k < 1 || words_per_topic == 0) throw std::invalid_argument("make_planted_corpus: empty topic layout");
  Rng rng(seed);
  const std::size_t ku = static_cast<std::size_t>(k);
  const std::size_t v = ku * words_per_topic;
  PlantedCorpus pc;
  pc.true_phi = Matrix(ku, v);
  for (std::size_t t = 0; t < ku; ++t) {
    for (std::size_t w = 0; w < words_per_topic; ++w) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "t%zuw%02zu", t, w);
      pc.dtm.vocab.add(buf);
      pc.true_phi(t, t * words_per_topic + w) = 1.0 / static_cast<double>(words_per_topic);
    }
  }
  std::vector<double> mix(ku);
  for (std::size_t d = 0; d < docs; ++d) {
    double sum = 0.0;
    for (auto& m : mix) sum += (m = draw_gamma(rng, doc_alpha));
    for (auto& m : mix) m /= sum;
    std::vector<int> doc;
    for (std::size_t i = 0; i < doc_len; ++i) {
      const std::size_t t = draw_categorical(rng, mix);
      doc.push_back(static_cast<int>(t * words_per_topic + rng.below(words_per_topic)));
    }
    pc.dtm.docs.push_back(std::move(doc));
    pc.dtm.doc_ids.push_back("doc" + std::to_string(d));
  }
  return pc;
}

lda::DocTermMatrix make_random_corpus(std::size_t docs, std::size_t vocab, std::size_t min_len, std::size_t max_len,
                                      std::uint64_t seed) {
  if (vocab == 0 || min_len == 0 || max_len < min_len)
    throw std::invalid_argument("make_random_corpus: bad sizes");
  Rng rng(seed);
  lda::DocTermMatrix dtm;
  for (std::size_t w = 0; w < vocab; ++w) dtm.vocab.add("w" + std::to_string(w));
  for (std::size_t d = 0; d < docs; ++d) {
    const std::size_t len = min_len + rng.below(max_len - min_len + 1);
    std::vector<int> doc(len);
    for (auto& w : doc) w = static_cast<int>(rng.below(vocab));
    dtm.docs.push_back(std::move(doc));
    dtm.doc_ids.push_back("doc" + std::to_string(d));
  }
  return dtm;
}

}  // namespace moodshift::synthetic
