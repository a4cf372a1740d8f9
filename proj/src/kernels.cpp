#include "moodshift/kernels.hpp"

#include <cmath>
#include <exception>
#include <stdexcept>

namespace moodshift::kernels {

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      c[i * n + j] += s;
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

namespace {

void check_inner(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
}

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  check_inner(a, b);
  Matrix c(a.rows(), b.cols());
  gemm_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Matrix matmul_parallel(const Matrix& a, const Matrix& b) {
  check_inner(a, b);
  Matrix c(a.rows(), b.cols());
  const auto m = static_cast<long long>(a.rows());
  const std::size_t k = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < m; ++i) {
    gemm_nn(a.data() + static_cast<std::size_t>(i) * k, b.data(), c.data() + static_cast<std::size_t>(i) * n, 1, k, n);
  }
  return c;
}

namespace {

double doc_log_likelihood(const Matrix& theta, const Matrix& phi, const std::vector<int>& doc, std::size_t d) {
  const std::size_t k = phi.rows();
  double s = 0.0;
  for (int w : doc) {
    double p = 0.0;
    for (std::size_t t = 0; t < k; ++t) p += theta(d, t) * phi(t, static_cast<std::size_t>(w));
    s += std::log(p);
  }
  return s;
}

}  // namespace

double lda_log_likelihood_serial(const Matrix& theta, const Matrix& phi, const std::vector<std::vector<int>>& docs) {
  double total = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) total += doc_log_likelihood(theta, phi, docs[d], d);
  return total;
}

double lda_log_likelihood_parallel(const Matrix& theta, const Matrix& phi, const std::vector<std::vector<int>>& docs) {
  std::vector<double> per_doc(docs.size());
  const auto n = static_cast<long long>(docs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long d = 0; d < n; ++d) {
    const auto du = static_cast<std::size_t>(d);
    per_doc[du] = doc_log_likelihood(theta, phi, docs[du], du);
  }
  double total = 0.0;
  for (double v : per_doc) total += v;
  return total;
}

void for_each_index(std::size_t n, Execution exec, const std::function<void(std::size_t)>& body) {
  if (exec == Execution::Serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // exceptions cannot cross the parallel region; keep the lowest-index one
  std::vector<std::exception_ptr> errors(n);
  const auto nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < nn; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace moodshift::kernels
