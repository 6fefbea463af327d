#pragma once

// Independent brute-force implementations used as test oracles. These stay
// deliberately naive and separate from the library code paths they check.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

inline std::optional<double> mase(const std::vector<double>& a, const std::vector<double>& f,
                                  const std::vector<double>& hist, std::int64_t m) {
	double num = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) num += std::fabs(a[i] - f[i]);
	num /= a.size();
	double den = 0.0;
	std::size_t cnt = 0;
	for (std::size_t t = m; t < hist.size(); ++t) {
		den += std::fabs(hist[t] - hist[t - m]);
		++cnt;
	}
	den /= cnt;
	if (den == 0.0) return std::nullopt;
	return num / den;
}

inline std::optional<double> mape(const std::vector<double>& a, const std::vector<double>& f) {
	double s = 0.0;
	std::size_t n = 0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		if (a[i] != 0.0) {
			s += std::fabs(a[i] - f[i]) / std::fabs(a[i]);
			++n;
		}
	}
	if (n == 0) return std::nullopt;
	return s / n;
}

inline double smape(const std::vector<double>& a, const std::vector<double>& f) {
	double s = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) {
		const double d = std::fabs(a[i]) + std::fabs(f[i]);
		if (d > 0.0) s += 2.0 * std::fabs(a[i] - f[i]) / d;
	}
	return s / a.size();
}

inline double mse(const std::vector<double>& a, const std::vector<double>& f) {
	double s = 0.0;
	for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - f[i]) * (a[i] - f[i]);
	return s / a.size();
}

inline double rmse(const std::vector<double>& a, const std::vector<double>& f) {
	return std::sqrt(mse(a, f));
}

// dense-covariance multivariate normal log-density via a plain Cholesky
inline double dense_gaussian_logpdf(const std::vector<double>& z, const std::vector<double>& mu,
                                    const std::vector<std::vector<double>>& sigma) {
	const std::size_t n = z.size();
	std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
	for (std::size_t j = 0; j < n; ++j) {
		double diag = sigma[j][j];
		for (std::size_t k = 0; k < j; ++k) diag -= l[j][k] * l[j][k];
		l[j][j] = std::sqrt(diag);
		for (std::size_t i = j + 1; i < n; ++i) {
			double s = sigma[i][j];
			for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
			l[i][j] = s / l[j][j];
		}
	}
	std::vector<double> y(n);
	for (std::size_t i = 0; i < n; ++i) {
		double s = z[i] - mu[i];
		for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * y[k];
		y[i] = s / l[i][i];
	}
	double quad = 0.0, logdet = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		quad += y[i] * y[i];
		logdet += 2.0 * std::log(l[i][i]);
	}
	return -0.5 * (n * std::log(2.0 * M_PI) + logdet + quad);
}

} // namespace oracle
