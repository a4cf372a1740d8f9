#include <doctest.h>

#include <atomic>

#include "moodshift/kernels.hpp"
#include "moodshift/random.hpp"

using namespace moodshift;

namespace {

Matrix random(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.values()) v = rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST_CASE("matmul serial equals parallel and a naive triple loop") {
  Rng rng(1);
  const auto a = random(37, 19, rng), b = random(19, 23, rng);
  const auto s = kernels::matmul_serial(a, b);
  CHECK(kernels::matmul_parallel(a, b) == s);
  for (std::size_t i = 0; i < 37; ++i)
    for (std::size_t j = 0; j < 23; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < 19; ++k) acc += a(i, k) * b(k, j);
      CHECK(s(i, j) == doctest::Approx(acc).epsilon(1e-13));
    }
}

TEST_CASE("transposed products agree with explicit transposes") {
  Rng rng(2);
  const auto a = random(5, 4, rng), b = random(6, 4, rng), m = random(5, 6, rng);
  Matrix bt(4, 6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 4; ++j) bt(j, i) = b(i, j);
  Matrix nt(5, 6);
  kernels::gemm_nt(a.data(), b.data(), nt.data(), 5, 4, 6);
  const auto ref = kernels::matmul_serial(a, bt);
  for (std::size_t i = 0; i < nt.size(); ++i) CHECK(nt.values()[i] == doctest::Approx(ref.values()[i]).epsilon(1e-13));

  Matrix at(4, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) at(j, i) = a(i, j);
  Matrix tn(4, 6);
  kernels::gemm_tn(a.data(), m.data(), tn.data(), 5, 4, 6);
  const auto ref2 = kernels::matmul_serial(at, m);
  for (std::size_t i = 0; i < tn.size(); ++i) CHECK(tn.values()[i] == doctest::Approx(ref2.values()[i]).epsilon(1e-13));
}

TEST_CASE("lda log likelihood serial equals parallel") {
  Rng rng(3);
  Matrix theta(40, 3, 1.0 / 3), phi(3, 10, 0.1);
  std::vector<std::vector<int>> docs(40);
  for (auto& d : docs)
    for (int i = 0; i < 12; ++i) d.push_back(static_cast<int>(rng.below(10)));
  const double s = kernels::lda_log_likelihood_serial(theta, phi, docs);
  CHECK(kernels::lda_log_likelihood_parallel(theta, phi, docs) == s);
  CHECK(s == doctest::Approx(40 * 12 * std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("for_each_index visits every index once") {
  for (auto exec : {kernels::Execution::Serial, kernels::Execution::Parallel}) {
    std::vector<int> hits(100, 0);
    kernels::for_each_index(100, exec, [&](std::size_t i) { ++hits[i]; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 100);
  }
}
