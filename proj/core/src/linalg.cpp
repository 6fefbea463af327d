#include "demandcast/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace demandcast::linalg {

bool cholesky(std::span<double> a, std::size_t n) {
	for (std::size_t j = 0; j < n; ++j) {
		double diag = a[j * n + j];
		for (std::size_t k = 0; k < j; ++k) {
			diag -= a[j * n + k] * a[j * n + k];
		}
		if (!(diag > 0.0) || !std::isfinite(diag)) {
			return false;
		}
		const double root = std::sqrt(diag);
		a[j * n + j] = root;
		for (std::size_t i = j + 1; i < n; ++i) {
			double sum = a[i * n + j];
			for (std::size_t k = 0; k < j; ++k) {
				sum -= a[i * n + k] * a[j * n + k];
			}
			a[i * n + j] = sum / root;
		}
	}
	return true;
}

void cholesky_solve(std::span<const double> l, std::size_t n, std::span<double> b) {
	for (std::size_t i = 0; i < n; ++i) { // forward: L y = b
		double sum = b[i];
		for (std::size_t k = 0; k < i; ++k) {
			sum -= l[i * n + k] * b[k];
		}
		b[i] = sum / l[i * n + i];
	}
	for (std::size_t ii = n; ii-- > 0;) { // backward: L^T x = y
		double sum = b[ii];
		for (std::size_t k = ii + 1; k < n; ++k) {
			sum -= l[k * n + ii] * b[k];
		}
		b[ii] = sum / l[ii * n + ii];
	}
}

double cholesky_logdet(std::span<const double> l, std::size_t n) {
	double acc = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		acc += std::log(l[i * n + i]);
	}
	return 2.0 * acc;
}

bool lu_solve(std::span<double> a, std::size_t n, std::span<double> b) {
	std::vector<std::size_t> piv(n);
	for (std::size_t i = 0; i < n; ++i) piv[i] = i;

	for (std::size_t col = 0; col < n; ++col) {
		std::size_t best = col;
		double best_abs = std::fabs(a[piv[col] * n + col]);
		for (std::size_t r = col + 1; r < n; ++r) {
			const double v = std::fabs(a[piv[r] * n + col]);
			if (v > best_abs) {
				best_abs = v;
				best = r;
			}
		}
		if (best_abs < 1e-300 || !std::isfinite(best_abs)) {
			return false;
		}
		std::swap(piv[col], piv[best]);
		const double pivot = a[piv[col] * n + col];
		for (std::size_t r = col + 1; r < n; ++r) {
			double* row = &a[piv[r] * n];
			const double f = row[col] / pivot;
			row[col] = f;
			if (f == 0.0) continue;
			const double* prow = &a[piv[col] * n];
			for (std::size_t c = col + 1; c < n; ++c) {
				row[c] -= f * prow[c];
			}
		}
	}

	std::vector<double> y(n);
	for (std::size_t i = 0; i < n; ++i) {
		double sum = b[piv[i]];
		for (std::size_t k = 0; k < i; ++k) {
			sum -= a[piv[i] * n + k] * y[k];
		}
		y[i] = sum;
	}
	for (std::size_t ii = n; ii-- > 0;) {
		double sum = y[ii];
		for (std::size_t k = ii + 1; k < n; ++k) {
			sum -= a[piv[ii] * n + k] * b[k];
		}
		b[ii] = sum / a[piv[ii] * n + ii];
	}
	return true;
}

std::vector<double> least_squares(std::span<const double> x, std::size_t rows, std::size_t cols,
                                  std::span<const double> y, double ridge) {
	std::vector<double> xtx(cols * cols, 0.0);
	std::vector<double> xty(cols, 0.0);
	for (std::size_t r = 0; r < rows; ++r) {
		const double* row = &x[r * cols];
		for (std::size_t i = 0; i < cols; ++i) {
			xty[i] += row[i] * y[r];
			for (std::size_t j = i; j < cols; ++j) {
				xtx[i * cols + j] += row[i] * row[j];
			}
		}
	}
	for (std::size_t i = 0; i < cols; ++i) {
		xtx[i * cols + i] += ridge;
		for (std::size_t j = 0; j < i; ++j) {
			xtx[i * cols + j] = xtx[j * cols + i];
		}
	}
	if (!cholesky(xtx, cols)) {
		return std::vector<double>(cols, 0.0);
	}
	cholesky_solve(xtx, cols, xty);
	return xty;
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
	std::memset(c.data(), 0, m * n * sizeof(double));
	for (std::size_t i = 0; i < m; ++i) {
		const double* arow = &a[i * k];
		double* crow = &c[i * n];
		for (std::size_t kk = 0; kk < k; ++kk) {
			const double av = arow[kk];
			if (av == 0.0) continue;
			const double* brow = &b[kk * n];
			for (std::size_t j = 0; j < n; ++j) {
				crow[j] += av * brow[j];
			}
		}
	}
}

} // namespace demandcast::linalg
