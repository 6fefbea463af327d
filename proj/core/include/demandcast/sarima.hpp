#pragma once

#include "demandcast/forecast.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace demandcast {

// (p,d,q)(P,D,Q)[s] orders. Regular orders up to 5, seasonal up to 2,
// d <= 2, D <= 1 -- the search bounds used throughout.
struct SarimaOrder {
	int p = 0, d = 0, q = 0;
	int P = 0, D = 0, Q = 0;
	int s = 1;

	int num_coeffs() const { return p + q + P + Q; }
	std::string to_string() const;
	bool operator==(const SarimaOrder&) const = default;
};

struct SarimaParams {
	std::vector<double> ar;  // phi, regular
	std::vector<double> ma;  // theta, regular
	std::vector<double> sar; // seasonal phi
	std::vector<double> sma; // seasonal theta
	double intercept = 0.0;
	double sigma2 = 1.0;
};

struct SarimaFit {
	SarimaOrder order;
	SarimaParams params;
	bool has_intercept = false; // included only when d + D == 0
	double loglik = 0.0;
	double aic = 0.0;
	std::size_t n_observations = 0; // differenced length
};

// ---- differencing ----------------------------------------------------------

// Applies (1-B)^d (1-B^s)^D; output length is n - d - D*s.
std::vector<double> difference(std::span<const double> series, int d, int D, int s);

// Coefficients c_0..c_{d+Ds} of (1-B)^d (1-B^s)^D with c_0 = 1.
std::vector<double> differencing_poly(int d, int D, int s);

// Continues the original series given a differenced-scale path: the exact
// inverse of difference() on the forecast horizon.
std::vector<double> integrate(std::span<const double> diffed_path,
                              std::span<const double> history, int d, int D, int s);

// ---- stationarity machinery ------------------------------------------------

// Monahan / Barndorff-Nielsen & Schou bijection between partial
// autocorrelations in (-1,1)^p and stationary AR coefficients of
// 1 - sum phi_k B^k.
void pacf_to_coeffs(std::span<const double> pacf, std::span<double> coeffs);
// Inverse transform; returns false when the polynomial is not stationary.
bool coeffs_to_pacf(std::span<const double> coeffs, std::span<double> pacf);

// True when all roots of 1 - sum phi_k B^k lie strictly outside the circle
// of radius 1 + margin (Schur-Cohn test on the rescaled polynomial).
bool poly_roots_outside(std::span<const double> phi, double margin);

// Shrinks coefficients lag-wise until poly_roots_outside holds.
void enforce_root_margin(std::span<double> phi, double margin);

// Multiplies regular and seasonal polynomials into the ARMA(p+sP, q+sQ)
// expansion used by the state-space filter.
struct ArmaExpansion {
	std::vector<double> phi;   // length p + s*P
	std::vector<double> theta; // length q + s*Q
};
ArmaExpansion expand_sarima(const SarimaOrder& order, const SarimaParams& params);

// ---- likelihood and fitting -------------------------------------------------

// Exact Gaussian log-likelihood of the differenced series under the
// state-space representation of the ARMA expansion, with exact stationary
// initialization. Throws NumericsError if the filter degenerates.
double sarima_loglik(const SarimaOrder& order, const SarimaParams& params,
                     std::span<const double> series);

enum class FitMethod {
	ExactML, // Kalman-filter likelihood, stationary init
	CSS,     // conditional sum of squares (search-phase approximation)
};

// Maximum likelihood fit for a fixed order: Hannan-Rissanen start, Nelder-
// Mead over the unconstrained (partial-autocorrelation, intercept) space.
// Throws ConvergenceError when the optimizer fails, HistoryError on a
// too-short series, NumericsError on degenerate data.
// css_startup (CSS only): observations to drop before summing squares;
// default -1 uses the AR expansion order. The order search fixes one common
// value so CSS scores stay comparable across candidate orders.
// warm_start seeds the optimizer instead of the Hannan-Rissanen fit.
SarimaFit fit_sarima(std::span<const double> series, const SarimaOrder& order,
                     FitMethod method = FitMethod::ExactML, int css_startup = -1,
                     const SarimaParams* warm_start = nullptr);

struct AutoSarimaOptions {
	bool exhaustive = false;
	int max_p = 5, max_q = 5; // paper bounds
	int max_P = 2, max_Q = 2;
	int max_d = 2, max_D = 1;
};

// Differencing orders from the variance-reduction heuristic, then a
// stepwise neighbourhood search (CSS-scored) with exact-ML refits of the
// leading candidates; `exhaustive` scores the full order grid instead. The
// white-noise model is always in the final pool, so the returned AIC never
// exceeds its AIC. Throws ConvergenceError when every candidate fails.
SarimaFit auto_sarima(std::span<const double> series, int s, const AutoSarimaOptions& opts = {});

// Point forecasts via the state-space prediction recursion; the 50% band is
// +-0.6745 sigma_h on the differenced scale, integrated back alongside the
// point path.
ForecastDistribution sarima_forecast(const SarimaFit& fit, std::span<const double> series,
                                     std::int64_t horizon);

// JSON form for the report bundle: order, coefficients, intercept, sigma2,
// loglik, aic.
std::string sarima_fit_to_json(const SarimaFit& fit);

} // namespace demandcast
