#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moodshift/corpus.hpp"
#include "moodshift/lda.hpp"
#include "moodshift/matrix.hpp"

// Seeded fixture generators for the transfer experiment and the LDA tests.
namespace moodshift::synthetic {

enum class Domain { A, B };

// Sentiment cues shared by both domains, plus a few "shifted" cues whose
// polarity differs between them (e.g. "positive" is good news in A and a
// test result in B). Topic words are disjoint between the domains.
struct TransferSpec {
  Domain domain = Domain::A;
  std::size_t size = 600;
  std::uint64_t seed = 0;
  double shifted_rate = 0.5;  // share of opinionated items that use a shifted cue (B only)
  double label_noise = 0.03;  // share of items whose gold label is redrawn
};

/// Labelled items with ids "<name>-<n>".
Dataset make_transfer_corpus(const TransferSpec& spec, const std::string& name);

struct PlantedCorpus {
  lda::DocTermMatrix dtm;
  Matrix true_phi;  // k x V, rows uniform over each topic's own words
};

/// Each topic owns `words_per_topic` words disjoint from every other topic;
/// each document mixes topics with a Dirichlet(doc_alpha) draw.
PlantedCorpus make_planted_corpus(int k, std::size_t words_per_topic, std::size_t docs, std::size_t doc_len,
                                  double doc_alpha, std::uint64_t seed);

/// D documents of uniform random words over a V-word vocabulary.
lda::DocTermMatrix make_random_corpus(std::size_t docs, std::size_t vocab, std::size_t min_len, std::size_t max_len,
                                      std::uint64_t seed);

}  // namespace moodshift::synthetic
