#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "moodshift/matrix.hpp"

// Data-parallel kernels. Every OpenMP variant has a serial reference with
// the same floating-point evaluation order, so the two produce bit-identical
// results regardless of thread count; the unit tests assert exactly that.
namespace moodshift::kernels {

enum class Execution { Serial, Parallel };

// Dense products on raw row-major buffers; results are accumulated into c.
// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
// c[m x n] += a[m x k] * b[n x k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
// c[k x n] += a[m x k]^T * b[m x n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

/// C = A * B.
Matrix matmul_serial(const Matrix& a, const Matrix& b);
/// Row-parallel C = A * B.
Matrix matmul_parallel(const Matrix& a, const Matrix& b);

/// sum_d sum_{w in doc d} log sum_t theta(d,t) phi(t,w). Per-document terms
/// are computed independently and summed in document order.
double lda_log_likelihood_serial(const Matrix& theta, const Matrix& phi, const std::vector<std::vector<int>>& docs);
double lda_log_likelihood_parallel(const Matrix& theta, const Matrix& phi, const std::vector<std::vector<int>>& docs);

/// Runs body(i) for i in [0, n). Items must write to disjoint outputs.
void for_each_index(std::size_t n, Execution exec, const std::function<void(std::size_t)>& body);

}  // namespace moodshift::kernels
