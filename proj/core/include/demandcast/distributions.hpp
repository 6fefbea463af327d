#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace demandcast {

// log NB(y; mu, alpha) with mean mu and variance mu + alpha*mu^2 (alpha -> 0
// recovers Poisson). Finite for all y >= 0, mu > 0, alpha > 0; throws
// DomainError otherwise.
double neg_binomial_logpdf(std::int64_t y, double mu, double alpha);

// Partial derivatives of neg_binomial_logpdf w.r.t. mu and alpha.
struct NbGrad {
	double d_mu;
	double d_alpha;
};
NbGrad neg_binomial_logpdf_grad(std::int64_t y, double mu, double alpha);

// Gamma-Poisson mixture draw from the same parametrization.
std::int64_t neg_binomial_sample(std::mt19937_64& rng, double mu, double alpha);

// Standard normal CDF and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

// log N(z; mu, D + V V^T) with diagonal D (entries > 0) and N x r factor V,
// evaluated via the Woodbury identity and matrix determinant lemma in
// O(N r^2) without materializing the dense covariance.
// V is row-major: V[i*r + j] is series i, factor j. Any r >= 0 is accepted
// (the covariance stays positive definite); r <= N is the efficient regime.
double lowrank_gaussian_logpdf(std::span<const double> z, std::span<const double> mu,
                               std::span<const double> d, std::span<const double> v,
                               std::size_t rank);

// Gradients of lowrank_gaussian_logpdf w.r.t. mu, d and V (same layouts).
struct LowRankGrad {
	std::vector<double> d_mu;
	std::vector<double> d_d;
	std::vector<double> d_v;
};
LowRankGrad lowrank_gaussian_logpdf_grad(std::span<const double> z, std::span<const double> mu,
                                         std::span<const double> d, std::span<const double> v,
                                         std::size_t rank);

// Draw z ~ N(mu, D + V V^T) as mu + sqrt(D) e1 + V e2, exact for this
// covariance structure.
std::vector<double> lowrank_gaussian_sample(std::mt19937_64& rng, std::span<const double> mu,
                                            std::span<const double> d, std::span<const double> v,
                                            std::size_t rank);

} // namespace demandcast
