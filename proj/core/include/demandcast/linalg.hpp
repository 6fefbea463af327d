#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace demandcast::linalg {

// Dense flat row-major helpers sized for the small systems that appear here
// (Kalman initialization, low-rank capacitance, least squares starts).

// In-place Cholesky A = L L^T on the lower triangle of a row-major n x n
// matrix. Returns false if A is not positive definite.
bool cholesky(std::span<double> a, std::size_t n);

// Solves L L^T x = b given the factor from cholesky(); b is overwritten.
void cholesky_solve(std::span<const double> l, std::size_t n, std::span<double> b);

// Log-determinant of A from its Cholesky factor.
double cholesky_logdet(std::span<const double> l, std::size_t n);

// Partial-pivot LU solve of A x = b; A and b are overwritten, x left in b.
// Returns false on a (numerically) singular matrix.
bool lu_solve(std::span<double> a, std::size_t n, std::span<double> b);

// Least squares via normal equations with a small ridge for rank safety:
// returns argmin ||X beta - y||^2, X row-major (rows x cols).
std::vector<double> least_squares(std::span<const double> x, std::size_t rows, std::size_t cols,
                                  std::span<const double> y, double ridge = 1e-9);

// C = A * B for row-major matrices, A (m x k), B (k x n). The ikj loop order
// keeps B accesses sequential.
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);

} // namespace demandcast::linalg
