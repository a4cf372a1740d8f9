#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "moodshift/corpus.hpp"
#include "moodshift/synthetic.hpp"

using namespace moodshift;

int main(int argc, char** argv) {
  CLI::App app{"Writes the seeded two-domain fixture corpora"};
  std::string out = ".";
  std::uint64_t seed = 7;
  std::size_t size_a = 600, size_b = 300;
  double shifted_rate = 0.5;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--size-a", size_a, "Source domain items");
  app.add_option("--size-b", size_b, "Target domain items");
  app.add_option("--shifted-rate", shifted_rate, "Share of target opinions using a shifted cue");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out);
    synthetic::TransferSpec a{synthetic::Domain::A, size_a, seed, shifted_rate};
    synthetic::TransferSpec b{synthetic::Domain::B, size_b, seed + 1, shifted_rate};
    export_corpus_file(synthetic::make_transfer_corpus(a, "domain_a"), out + "/domain_a.corpus");
    export_corpus_file(synthetic::make_transfer_corpus(b, "domain_b"), out + "/domain_b.corpus");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
