// Serial reference against the OpenMP variant of each data-parallel kernel.

#include <benchmark/benchmark.h>

#include "moodshift/kernels.hpp"
#include "moodshift/lda.hpp"
#include "moodshift/random.hpp"
#include "moodshift/synthetic.hpp"
#include "moodshift/transformer.hpp"

using namespace moodshift;
using kernels::Execution;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void normalise_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0;
    for (auto& v : m.row(r)) s += (v = std::abs(v) + 1e-3);
    for (auto& v : m.row(r)) v /= s;
  }
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul_serial(a, b));
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul_parallel(a, b));
}

struct LikelihoodInputs {
  Matrix theta, phi;
  std::vector<std::vector<int>> docs;
};

LikelihoodInputs likelihood_inputs(std::size_t docs) {
  const auto dtm = synthetic::make_random_corpus(docs, 2000, 10, 40, 3);
  LikelihoodInputs in{random_matrix(docs, 20, 4), random_matrix(20, 2000, 5), dtm.docs};
  normalise_rows(in.theta);
  normalise_rows(in.phi);
  return in;
}

void BM_LdaLikelihoodSerial(benchmark::State& state) {
  const auto in = likelihood_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::lda_log_likelihood_serial(in.theta, in.phi, in.docs));
}

void BM_LdaLikelihoodParallel(benchmark::State& state) {
  const auto in = likelihood_inputs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::lda_log_likelihood_parallel(in.theta, in.phi, in.docs));
}

void forward_bench(benchmark::State& state, Execution exec) {
  nn::TransformerConfig cfg;
  cfg.vocab_size = 500;
  cfg.max_len = 32;
  cfg.d_model = 64;
  cfg.n_heads = 4;
  cfg.n_layers = 2;
  cfg.d_ff = 128;
  const auto params = nn::Parameters::initialize(cfg, 1);
  Rng rng(6);
  std::vector<nn::EncodedText> batch(static_cast<std::size_t>(state.range(0)));
  for (auto& x : batch) {
    x.ids.assign(cfg.max_len, 0);
    x.mask.assign(cfg.max_len, 0);
    const auto len = 4 + rng.below(cfg.max_len - 4);
    for (std::size_t i = 0; i < len; ++i) {
      x.ids[i] = static_cast<int>(2 + rng.below(cfg.vocab_size - 2));
      x.mask[i] = 1;
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(cfg, params, batch, exec));
}

void BM_ForwardSerial(benchmark::State& state) { forward_bench(state, Execution::Serial); }
void BM_ForwardParallel(benchmark::State& state) { forward_bench(state, Execution::Parallel); }

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(64)->Arg(256);
BENCHMARK(BM_MatmulParallel)->Arg(64)->Arg(256);
BENCHMARK(BM_LdaLikelihoodSerial)->Arg(2000);
BENCHMARK(BM_LdaLikelihoodParallel)->Arg(2000);
BENCHMARK(BM_ForwardSerial)->Arg(64);
BENCHMARK(BM_ForwardParallel)->Arg(64);

BENCHMARK_MAIN();
