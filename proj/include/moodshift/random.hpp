#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace moodshift {

// Every stochastic step (splits, Gibbs sampling, weight init, batch
// shuffling) draws from std::mt19937_64, whose output sequence is fixed by
// the C++ standard. The helpers below replace the implementation-defined
// std distributions so that results match across standard libraries:
//   uniform01()  = (next() >> 11) * 2^-53
//   below(n)     = floor(uniform01() * n)
//   shuffle      = Fisher-Yates from the back, j = below(i + 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::size_t below(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  template <typename T>
  void shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = below(i);
      using std::swap;
      swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace moodshift
