#include "demandcast/distributions.hpp"

#include "demandcast/errors.hpp"
#include "demandcast/linalg.hpp"

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_sf_psi.h>

#include <cmath>

namespace demandcast {

namespace {

void check_nb_params(std::int64_t y, double mu, double alpha) {
	if (y < 0) {
		throw DomainError("negative binomial support is y >= 0, got " + std::to_string(y));
	}
	if (!(mu > 0.0) || !std::isfinite(mu) || !(alpha > 0.0) || !std::isfinite(alpha)) {
		throw DomainError("negative binomial needs finite mu > 0 and alpha > 0");
	}
}

} // namespace

double neg_binomial_logpdf(std::int64_t y, double mu, double alpha) {
	check_nb_params(y, mu, alpha);
	// shape r = 1/alpha, success prob p = r / (r + mu)
	const double r = 1.0 / alpha;
	const double yd = static_cast<double>(y);
	const double log1p_am = std::log1p(alpha * mu);
	return std::lgamma(yd + r) - std::lgamma(r) - std::lgamma(yd + 1.0) - r * log1p_am +
	       yd * (std::log(mu) + std::log(alpha) - log1p_am);
}

NbGrad neg_binomial_logpdf_grad(std::int64_t y, double mu, double alpha) {
	check_nb_params(y, mu, alpha);
	const double r = 1.0 / alpha;
	const double yd = static_cast<double>(y);
	const double denom = 1.0 + alpha * mu;

	const double d_mu = yd / mu - (1.0 + yd * alpha) / denom;

	// chain through r = 1/alpha: d/dalpha = d/dr * (-1/alpha^2)
	const double d_r = gsl_sf_psi(yd + r) - gsl_sf_psi(r) + std::log(r) + 1.0 -
	                   std::log(r + mu) - (r + yd) / (r + mu);
	const double d_alpha = -d_r * r * r;
	return NbGrad{d_mu, d_alpha};
}

std::int64_t neg_binomial_sample(std::mt19937_64& rng, double mu, double alpha) {
	if (!(mu > 0.0) || !(alpha >= 0.0)) {
		throw DomainError("negative binomial sampling needs mu > 0 and alpha >= 0");
	}
	double lambda = mu;
	if (alpha > 1e-12) {
		const double shape = 1.0 / alpha;
		std::gamma_distribution<double> gamma(shape, mu * alpha); // mean mu
		lambda = gamma(rng);
	}
	if (lambda <= 0.0) {
		return 0;
	}
	std::poisson_distribution<std::int64_t> pois(lambda);
	return pois(rng);
}

double normal_cdf(double x) {
	return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double normal_quantile(double p) {
	if (!(p > 0.0) || !(p < 1.0)) {
		throw DomainError("normal quantile needs p in (0, 1)");
	}
	return gsl_cdf_ugaussian_Pinv(p);
}

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

struct LowRankWork {
	std::size_t n;
	std::size_t r;
	std::vector<double> e;       // z - mu
	std::vector<double> dinv_e;  // D^-1 e
	std::vector<double> w;       // V^T D^-1 e            (r)
	std::vector<double> cap;     // chol of K = I + V^T D^-1 V (r x r)
	std::vector<double> kinv_w;  // K^-1 w                (r)
	double quad;                 // e^T Sigma^-1 e
	double logdet;               // log |Sigma|
};

LowRankWork lowrank_prepare(std::span<const double> z, std::span<const double> mu,
                            std::span<const double> d, std::span<const double> v,
                            std::size_t rank) {
	const std::size_t n = z.size();
	if (mu.size() != n || d.size() != n || v.size() != n * rank) {
		throw ShapeError("lowrank_gaussian_logpdf: inconsistent argument sizes");
	}
	LowRankWork wk;
	wk.n = n;
	wk.r = rank;
	wk.e.resize(n);
	wk.dinv_e.resize(n);
	wk.w.assign(rank, 0.0);
	wk.cap.assign(rank * rank, 0.0);

	double logdet_d = 0.0;
	double quad_diag = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		if (!(d[i] > 0.0) || !std::isfinite(d[i])) {
			throw DomainError("lowrank_gaussian_logpdf: diagonal entries must be positive");
		}
		wk.e[i] = z[i] - mu[i];
		wk.dinv_e[i] = wk.e[i] / d[i];
		logdet_d += std::log(d[i]);
		quad_diag += wk.e[i] * wk.dinv_e[i];
	}

	// K = I + V^T D^-1 V, w = V^T D^-1 e
	for (std::size_t j = 0; j < rank; ++j) {
		wk.cap[j * rank + j] = 1.0;
	}
	for (std::size_t i = 0; i < n; ++i) {
		const double* vi = &v[i * rank];
		const double inv_d = 1.0 / d[i];
		for (std::size_t a = 0; a < rank; ++a) {
			wk.w[a] += vi[a] * wk.dinv_e[i];
			for (std::size_t b = a; b < rank; ++b) {
				wk.cap[a * rank + b] += vi[a] * vi[b] * inv_d;
			}
		}
	}
	for (std::size_t a = 0; a < rank; ++a) {
		for (std::size_t b = 0; b < a; ++b) {
			wk.cap[a * rank + b] = wk.cap[b * rank + a];
		}
	}

	double logdet_k = 0.0;
	wk.kinv_w = wk.w;
	if (rank > 0) {
		if (!linalg::cholesky(wk.cap, rank)) {
			throw NumericsError("lowrank_gaussian_logpdf: capacitance matrix not positive definite");
		}
		logdet_k = linalg::cholesky_logdet(wk.cap, rank);
		linalg::cholesky_solve(wk.cap, rank, wk.kinv_w);
	}

	double quad_corr = 0.0;
	for (std::size_t a = 0; a < rank; ++a) {
		quad_corr += wk.w[a] * wk.kinv_w[a];
	}
	wk.quad = quad_diag - quad_corr;
	wk.logdet = logdet_d + logdet_k;
	return wk;
}

} // namespace

double lowrank_gaussian_logpdf(std::span<const double> z, std::span<const double> mu,
                               std::span<const double> d, std::span<const double> v,
                               std::size_t rank) {
	const LowRankWork wk = lowrank_prepare(z, mu, d, v, rank);
	return -0.5 * (static_cast<double>(wk.n) * kLogTwoPi + wk.logdet + wk.quad);
}

LowRankGrad lowrank_gaussian_logpdf_grad(std::span<const double> z, std::span<const double> mu,
                                         std::span<const double> d, std::span<const double> v,
                                         std::size_t rank) {
	const LowRankWork wk = lowrank_prepare(z, mu, d, v, rank);
	const std::size_t n = wk.n;
	const std::size_t r = wk.r;

	// A = Sigma^-1 e = D^-1 e - D^-1 V K^-1 w
	std::vector<double> a(n);
	for (std::size_t i = 0; i < n; ++i) {
		double corr = 0.0;
		const double* vi = &v[i * r];
		for (std::size_t k = 0; k < r; ++k) {
			corr += vi[k] * wk.kinv_w[k];
		}
		a[i] = wk.dinv_e[i] - corr / d[i];
	}

	// Sigma^-1 V = D^-1 V K^-1 (Woodbury collapses the correction term).
	std::vector<double> siginv_v(n * r, 0.0);
	for (std::size_t i = 0; i < n; ++i) {
		const double* vi = &v[i * r];
		double* out = &siginv_v[i * r];
		std::vector<double> rhs(vi, vi + r);
		if (r > 0) {
			linalg::cholesky_solve(wk.cap, r, rhs);
		}
		for (std::size_t k = 0; k < r; ++k) {
			out[k] = rhs[k] / d[i];
		}
	}

	LowRankGrad g;
	g.d_mu = a;

	// diag(Sigma^-1)_i = 1/d_i - (v_i/d_i)^T K^-1 (v_i/d_i)
	g.d_d.resize(n);
	for (std::size_t i = 0; i < n; ++i) {
		const double* vi = &v[i * r];
		double diag_corr = 0.0;
		for (std::size_t k = 0; k < r; ++k) {
			diag_corr += vi[k] * siginv_v[i * r + k]; // v_i^T (D^-1 V K^-1)_i = v_i^T K^-1 v_i / d_i
		}
		const double diag_siginv = 1.0 / d[i] - diag_corr / d[i];
		g.d_d[i] = -0.5 * (diag_siginv - a[i] * a[i]);
	}

	// dL/dV = -(Sigma^-1 V - A (A^T V))
	std::vector<double> at_v(r, 0.0);
	for (std::size_t i = 0; i < n; ++i) {
		const double* vi = &v[i * r];
		for (std::size_t k = 0; k < r; ++k) {
			at_v[k] += a[i] * vi[k];
		}
	}
	g.d_v.resize(n * r);
	for (std::size_t i = 0; i < n; ++i) {
		for (std::size_t k = 0; k < r; ++k) {
			g.d_v[i * r + k] = -(siginv_v[i * r + k] - a[i] * at_v[k]);
		}
	}
	return g;
}

std::vector<double> lowrank_gaussian_sample(std::mt19937_64& rng, std::span<const double> mu,
                                            std::span<const double> d, std::span<const double> v,
                                            std::size_t rank) {
	const std::size_t n = mu.size();
	if (d.size() != n || v.size() != n * rank) {
		throw ShapeError("lowrank_gaussian_sample: inconsistent argument sizes");
	}
	std::normal_distribution<double> gauss(0.0, 1.0);
	std::vector<double> eps_r(rank);
	for (std::size_t k = 0; k < rank; ++k) {
		eps_r[k] = gauss(rng);
	}
	std::vector<double> out(n);
	for (std::size_t i = 0; i < n; ++i) {
		double val = mu[i] + std::sqrt(d[i]) * gauss(rng);
		const double* vi = &v[i * rank];
		for (std::size_t k = 0; k < rank; ++k) {
			val += vi[k] * eps_r[k];
		}
		out[i] = val;
	}
	return out;
}

} // namespace demandcast
