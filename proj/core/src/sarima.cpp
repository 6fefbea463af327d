#include "demandcast/sarima.hpp"

#include "demandcast/errors.hpp"
#include "demandcast/linalg.hpp"

#include <nlohmann/json.hpp>

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

namespace demandcast {

namespace {

constexpr double kRootMargin = 1e-5; // fitted polys keep roots outside 1 + margin
constexpr double kLogTwoPi = 1.8378770664093454836;

double mean_of(std::span<const double> x) {
	return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sd_of(std::span<const double> x) {
	if (x.size() < 2) return 0.0;
	const double m = mean_of(x);
	double sq = 0.0;
	for (const double v : x) {
		sq += (v - m) * (v - m);
	}
	return std::sqrt(sq / static_cast<double>(x.size()));
}

void validate_order(const SarimaOrder& o) {
	if (o.p < 0 || o.q < 0 || o.P < 0 || o.Q < 0 || o.d < 0 || o.D < 0 || o.s < 1) {
		throw ContractError("sarima order fields must be non-negative, s >= 1");
	}
	if (o.p > 5 || o.q > 5 || o.P > 2 || o.Q > 2 || o.d > 2 || o.D > 1) {
		throw ContractError("sarima order outside search bounds: " + o.to_string());
	}
	if (o.s == 1 && (o.P > 0 || o.Q > 0 || o.D > 0)) {
		throw ContractError("seasonal terms need s > 1: " + o.to_string());
	}
}

} // namespace

std::string SarimaOrder::to_string() const {
	return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")(" +
	       std::to_string(P) + "," + std::to_string(D) + "," + std::to_string(Q) + ")[" +
	       std::to_string(s) + "]";
}

std::vector<double> difference(std::span<const double> series, int d, int D, int s) {
	if (d < 0 || D < 0 || s < 1) {
		throw ContractError("difference needs d, D >= 0 and s >= 1");
	}
	if (static_cast<int>(series.size()) <= d + D * s) {
		throw HistoryError("series of length " + std::to_string(series.size()) +
		                   " too short for differencing (d=" + std::to_string(d) +
		                   ", D=" + std::to_string(D) + ", s=" + std::to_string(s) + ")");
	}
	std::vector<double> w(series.begin(), series.end());
	for (int k = 0; k < d; ++k) {
		for (std::size_t t = w.size() - 1; t >= 1; --t) {
			w[t] -= w[t - 1];
		}
		w.erase(w.begin());
	}
	for (int k = 0; k < D; ++k) {
		for (std::size_t t = w.size() - 1; t >= static_cast<std::size_t>(s); --t) {
			w[t] -= w[t - s];
		}
		w.erase(w.begin(), w.begin() + s);
	}
	return w;
}

std::vector<double> differencing_poly(int d, int D, int s) {
	std::vector<double> c{1.0};
	auto convolve_with = [&c](int lag) {
		// multiply by (1 - B^lag)
		std::vector<double> out(c.size() + lag, 0.0);
		for (std::size_t i = 0; i < c.size(); ++i) {
			out[i] += c[i];
			out[i + lag] -= c[i];
		}
		c = std::move(out);
	};
	for (int k = 0; k < d; ++k) convolve_with(1);
	for (int k = 0; k < D; ++k) convolve_with(s);
	return c;
}

std::vector<double> integrate(std::span<const double> diffed_path,
                              std::span<const double> history, int d, int D, int s) {
	const auto c = differencing_poly(d, D, s);
	const std::size_t depth = c.size() - 1;
	if (history.size() < depth) {
		throw HistoryError("integrate needs at least " + std::to_string(depth) + " history values");
	}
	// x_t = w_t - sum_{k>=1} c_k x_{t-k}
	std::vector<double> buf(history.end() - static_cast<std::ptrdiff_t>(depth), history.end());
	std::vector<double> out;
	out.reserve(diffed_path.size());
	for (const double w : diffed_path) {
		double x = w;
		for (std::size_t k = 1; k <= depth; ++k) {
			x -= c[k] * buf[buf.size() - k];
		}
		out.push_back(x);
		buf.push_back(x);
	}
	return out;
}

void pacf_to_coeffs(std::span<const double> pacf, std::span<double> coeffs) {
	const std::size_t p = pacf.size();
	std::copy(pacf.begin(), pacf.end(), coeffs.begin());
	std::vector<double> work(coeffs.begin(), coeffs.begin() + p);
	for (std::size_t j = 1; j < p; ++j) {
		for (std::size_t k = 0; k < j; ++k) {
			work[k] -= pacf[j] * coeffs[j - k - 1];
		}
		std::copy(work.begin(), work.begin() + j, coeffs.begin());
		coeffs[j] = pacf[j];
	}
}

bool coeffs_to_pacf(std::span<const double> coeffs, std::span<double> pacf) {
	const std::size_t p = coeffs.size();
	std::copy(coeffs.begin(), coeffs.end(), pacf.begin());
	std::vector<double> work(pacf.begin(), pacf.begin() + p);
	for (std::size_t j = p; j-- > 1;) {
		const double a = pacf[j];
		const double denom = 1.0 - a * a;
		if (!(std::fabs(a) < 1.0) || denom <= 0.0) {
			return false;
		}
		for (std::size_t k = 0; k < j; ++k) {
			work[k] = (pacf[k] + a * pacf[j - k - 1]) / denom;
		}
		std::copy(work.begin(), work.begin() + j, pacf.begin());
	}
	return p == 0 || std::fabs(pacf[0]) < 1.0;
}

bool poly_roots_outside(std::span<const double> phi, double margin) {
	// roots of 1 - sum phi_k B^k outside radius 1+margin <=> the polynomial
	// with coefficients phi_k (1+margin)^k is strictly stationary
	std::size_t p = phi.size();
	while (p > 0 && phi[p - 1] == 0.0) {
		--p;
	}
	if (p == 0) {
		return true;
	}
	std::vector<double> scaled(p);
	double f = 1.0;
	for (std::size_t k = 0; k < p; ++k) {
		f *= 1.0 + margin;
		scaled[k] = phi[k] * f;
	}
	std::vector<double> pacf(p);
	return coeffs_to_pacf(scaled, pacf);
}

void enforce_root_margin(std::span<double> phi, double margin) {
	int guard = 0;
	while (!poly_roots_outside(phi, margin)) {
		double f = 1.0;
		for (std::size_t k = 0; k < phi.size(); ++k) {
			f /= 1.0 + 1e-3;
			phi[k] *= f;
		}
		if (++guard > 64) { // moduli grow by ~1.001 per pass, so this is unreachable
			std::fill(phi.begin(), phi.end(), 0.0);
			return;
		}
	}
}

ArmaExpansion expand_sarima(const SarimaOrder& order, const SarimaParams& params) {
	const int s = order.s;
	ArmaExpansion e;
	e.phi.assign(order.p + s * order.P, 0.0);
	e.theta.assign(order.q + s * order.Q, 0.0);
	std::copy(params.ar.begin(), params.ar.end(), e.phi.begin());
	std::copy(params.ma.begin(), params.ma.end(), e.theta.begin());
	// (1 - sum phi B)(1 - sum Phi B^s): cross terms subtract
	for (int j = 0; j < order.P; ++j) {
		e.phi[(j + 1) * s - 1] += params.sar[j];
		for (int i = 0; i < order.p; ++i) {
			e.phi[(j + 1) * s + i] -= params.ar[i] * params.sar[j];
		}
	}
	// (1 + sum theta B)(1 + sum Theta B^s): cross terms add
	for (int j = 0; j < order.Q; ++j) {
		e.theta[(j + 1) * s - 1] += params.sma[j];
		for (int i = 0; i < order.q; ++i) {
			e.theta[(j + 1) * s + i] += params.ma[i] * params.sma[j];
		}
	}
	return e;
}

namespace {

struct KalmanStats {
	double ssq = 0.0;
	double sumlog = 0.0;
	std::size_t nu = 0;
};

// State-space filter for an ARMA(p', q') with unit innovation variance,
// Harvey representation with r = max(p', q'+1); sigma^2 is concentrated out.
class ArmaKalman {
public:
	ArmaKalman(std::vector<double> phi, std::vector<double> theta)
	    : phi_(std::move(phi)), theta_(std::move(theta)) {
		p_ = phi_.size();
		q_ = theta_.size();
		r_ = std::max(p_, q_ + 1);
		v_.assign(r_, 0.0);
		v_[0] = 1.0;
		for (std::size_t k = 0; k < q_; ++k) {
			v_[k + 1] = theta_[k];
		}
		a_.assign(r_, 0.0);
		anew_.assign(r_, 0.0);
		const std::size_t m = packed_size();
		p_cov_.assign(m, 0.0);
		p_new_.assign(m, 0.0);
		m_gain_.assign(r_, 0.0);
		stationary_init();
	}

	// Runs the filter over the centered series; state ends filtered at the
	// last observation.
	KalmanStats filter(std::span<const double> centered) {
		KalmanStats st;
		for (const double w : centered) {
			predict_into_new();
			const double resid = w - anew_[0];
			const double gain = p_new_[idx(0, 0)];
			if (!(gain > 0.0) || !std::isfinite(gain)) {
				throw NumericsError("kalman filter lost positive definiteness");
			}
			st.ssq += resid * resid / gain;
			st.sumlog += std::log(gain);
			++st.nu;
			for (std::size_t i = 0; i < r_; ++i) {
				m_gain_[i] = p_new_[idx(0, i)];
			}
			const double scaled = resid / gain;
			for (std::size_t i = 0; i < r_; ++i) {
				a_[i] = anew_[i] + m_gain_[i] * scaled;
			}
			for (std::size_t i = 0; i < r_; ++i) {
				for (std::size_t j = i; j < r_; ++j) {
					p_cov_[idx(i, j)] = p_new_[idx(i, j)] - m_gain_[i] * m_gain_[j] / gain;
				}
			}
		}
		return st;
	}

	// One prediction-only step; returns (mean, variance/sigma^2) of the next
	// observation and advances the state without an update.
	std::pair<double, double> predict_step() {
		predict_into_new();
		std::swap(a_, anew_);
		std::swap(p_cov_, p_new_);
		return {a_[0], p_cov_[idx(0, 0)]};
	}

private:
	std::size_t packed_size() const { return r_ * (r_ + 1) / 2; }

	std::size_t idx(std::size_t i, std::size_t j) const {
		if (i > j) std::swap(i, j);
		return i * r_ - i * (i - 1) / 2 + (j - i);
	}

	double phi_at(std::size_t i) const { return i < p_ ? phi_[i] : 0.0; }

	void predict_into_new() {
		for (std::size_t i = 0; i < r_; ++i) {
			anew_[i] = (i + 1 < r_ ? a_[i + 1] : 0.0) + phi_at(i) * a_[0];
		}
		const double p00 = p_cov_[idx(0, 0)];
		for (std::size_t i = 0; i < r_; ++i) {
			for (std::size_t j = i; j < r_; ++j) {
				double tmp = v_[i] * v_[j] + phi_at(i) * phi_at(j) * p00;
				if (j + 1 < r_) tmp += phi_at(i) * p_cov_[idx(0, j + 1)];
				if (i + 1 < r_) tmp += phi_at(j) * p_cov_[idx(0, i + 1)];
				if (i + 1 < r_ && j + 1 < r_) tmp += p_cov_[idx(i + 1, j + 1)];
				p_new_[idx(i, j)] = tmp;
			}
		}
	}

	// Exact stationary covariance: solve P = T P T' + R R' over the packed
	// upper triangle (a small dense linear system; T is companion-sparse).
	void stationary_init() {
		const std::size_t m = packed_size();
		std::vector<double> sys(m * m, 0.0);
		std::vector<double> rhs(m, 0.0);
		for (std::size_t i = 0; i < r_; ++i) {
			for (std::size_t j = i; j < r_; ++j) {
				const std::size_t row = idx(i, j);
				sys[row * m + row] += 1.0;
				sys[row * m + idx(0, 0)] -= phi_at(i) * phi_at(j);
				if (j + 1 < r_) sys[row * m + idx(0, j + 1)] -= phi_at(i);
				if (i + 1 < r_) sys[row * m + idx(0, i + 1)] -= phi_at(j);
				if (i + 1 < r_ && j + 1 < r_) sys[row * m + idx(i + 1, j + 1)] -= 1.0;
				rhs[row] = v_[i] * v_[j];
			}
		}
		if (!linalg::lu_solve(sys, m, rhs)) {
			throw NumericsError("stationary initialization failed (roots too close to unit circle)");
		}
		p_cov_ = std::move(rhs);
	}

	std::vector<double> phi_;
	std::vector<double> theta_;
	std::vector<double> v_; // R vector (1, theta...)
	std::size_t p_ = 0, q_ = 0, r_ = 0;
	std::vector<double> a_, anew_;
	std::vector<double> p_cov_, p_new_; // packed upper triangles
	std::vector<double> m_gain_;
};

double concentrated_loglik(const KalmanStats& st) {
	const double n = static_cast<double>(st.nu);
	const double s2 = st.ssq / n;
	if (!(s2 > 0.0) || !std::isfinite(s2)) {
		throw NumericsError("degenerate innovation variance");
	}
	return -0.5 * (n * (kLogTwoPi + std::log(s2) + 1.0) + st.sumlog);
}

// Conditional sum of squares: the search-phase approximation to the
// likelihood. Drops the first p' observations and zero-initializes errors.
struct CssResult {
	double ssq = 0.0;
	std::size_t nu = 0;
	double loglik = -std::numeric_limits<double>::infinity();
};

CssResult css_objective(const ArmaExpansion& e, std::span<const double> centered,
                        int startup = -1) {
	const std::size_t p = e.phi.size();
	const std::size_t q = e.theta.size();
	const std::size_t n = centered.size();
	const std::size_t ncond = startup < 0 ? p : std::max(p, static_cast<std::size_t>(startup));
	if (n <= ncond + q + 1) {
		throw HistoryError("series too short for CSS evaluation");
	}
	std::vector<double> err(n, 0.0);
	CssResult out;
	for (std::size_t t = ncond; t < n; ++t) {
		double e_t = centered[t];
		for (std::size_t i = 0; i < p; ++i) {
			e_t -= e.phi[i] * centered[t - 1 - i];
		}
		for (std::size_t j = 0; j < q && t >= ncond + j + 1; ++j) {
			e_t -= e.theta[j] * err[t - 1 - j];
		}
		err[t] = e_t;
		out.ssq += e_t * e_t;
		++out.nu;
	}
	const double s2 = out.ssq / static_cast<double>(out.nu);
	if (s2 > 0.0 && std::isfinite(s2)) {
		out.loglik = -0.5 * static_cast<double>(out.nu) * (kLogTwoPi + std::log(s2) + 1.0);
	}
	return out;
}

// ---- unconstrained parameter packing ----------------------------------------

struct ParamPacker {
	SarimaOrder order;
	bool has_intercept = false;

	std::size_t dim() const {
		return static_cast<std::size_t>(order.num_coeffs()) + (has_intercept ? 1 : 0);
	}

	// unconstrained -> model coefficients via tanh + Levinson recursion per
	// block; MA blocks negate so invertibility mirrors AR stationarity
	SarimaParams unpack(std::span<const double> x) const {
		SarimaParams out;
		std::size_t off = 0;
		auto block = [&x, &off](int len, bool ma_sign) {
			std::vector<double> pacf(len), coeffs(len);
			for (int i = 0; i < len; ++i) {
				pacf[i] = std::tanh(x[off + i]);
			}
			off += len;
			pacf_to_coeffs(pacf, coeffs);
			if (ma_sign) {
				for (double& c : coeffs) c = -c;
			}
			return coeffs;
		};
		out.ar = block(order.p, false);
		out.ma = block(order.q, true);
		out.sar = block(order.P, false);
		out.sma = block(order.Q, true);
		out.intercept = has_intercept ? x[off] : 0.0;
		return out;
	}

	// Inverse; shrinks non-stationary starts toward zero until they map.
	std::vector<double> pack(const SarimaParams& p) const {
		std::vector<double> x;
		x.reserve(dim());
		auto block = [&x](std::vector<double> coeffs, bool ma_sign) {
			if (ma_sign) {
				for (double& c : coeffs) c = -c;
			}
			std::vector<double> pacf(coeffs.size());
			int guard = 0;
			while (!coeffs_to_pacf(coeffs, pacf)) {
				for (double& c : coeffs) c *= 0.9;
				if (++guard > 50) {
					std::fill(pacf.begin(), pacf.end(), 0.0);
					break;
				}
			}
			for (const double v : pacf) {
				x.push_back(std::atanh(std::clamp(v, -0.999999, 0.999999)));
			}
		};
		block(p.ar, false);
		block(p.ma, true);
		block(p.sar, false);
		block(p.sma, true);
		if (has_intercept) {
			x.push_back(p.intercept);
		}
		return x;
	}
};

// ---- Nelder-Mead (GSL) -------------------------------------------------------

struct NmProblem {
	const std::function<double(std::span<const double>)>* fn;
	std::size_t dim;
	std::vector<double> scratch;
};

double nm_eval(const gsl_vector* v, void* raw) {
	auto* prob = static_cast<NmProblem*>(raw);
	for (std::size_t i = 0; i < prob->dim; ++i) {
		prob->scratch[i] = gsl_vector_get(v, i);
	}
	const double value = (*prob->fn)(prob->scratch);
	return std::isfinite(value) ? value : 1e100;
}

struct NmOutcome {
	std::vector<double> x;
	double value = std::numeric_limits<double>::infinity();
	bool converged = false;
};

NmOutcome nelder_mead(const std::function<double(std::span<const double>)>& fn,
                      std::span<const double> x0, double step, std::size_t max_iter, double tol) {
	const std::size_t k = x0.size();
	NmProblem prob{&fn, k, std::vector<double>(k)};

	gsl_multimin_function f;
	f.n = k;
	f.f = &nm_eval;
	f.params = &prob;

	gsl_vector* x = gsl_vector_alloc(k);
	gsl_vector* steps = gsl_vector_alloc(k);
	for (std::size_t i = 0; i < k; ++i) {
		gsl_vector_set(x, i, x0[i]);
		gsl_vector_set(steps, i, step);
	}
	gsl_multimin_fminimizer* mini =
	    gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, k);
	gsl_multimin_fminimizer_set(mini, &f, x, steps);

	NmOutcome out;
	out.x.assign(x0.begin(), x0.end());
	for (std::size_t it = 0; it < max_iter; ++it) {
		if (gsl_multimin_fminimizer_iterate(mini) != 0) {
			break;
		}
		if (gsl_multimin_fminimizer_size(mini) < tol) {
			out.converged = true;
			break;
		}
	}
	out.value = mini->fval;
	for (std::size_t i = 0; i < k; ++i) {
		out.x[i] = gsl_vector_get(mini->x, i);
	}
	gsl_multimin_fminimizer_free(mini);
	gsl_vector_free(steps);
	gsl_vector_free(x);
	return out;
}

// ---- starting values ---------------------------------------------------------

// Hannan-Rissanen: long-AR residuals, then one least-squares pass over the
// AR/MA lag design.
SarimaParams initial_params(const SarimaOrder& order, std::span<const double> w,
                            bool has_intercept) {
	SarimaParams start;
	start.ar.assign(order.p, 0.0);
	start.ma.assign(order.q, 0.0);
	start.sar.assign(order.P, 0.0);
	start.sma.assign(order.Q, 0.0);
	const double mu = has_intercept ? mean_of(w) : 0.0;
	start.intercept = mu;

	const std::size_t n = w.size();
	std::vector<double> wc(n);
	for (std::size_t t = 0; t < n; ++t) {
		wc[t] = w[t] - mu;
	}

	const int s = order.s;
	const std::size_t long_ar =
	    std::min<std::size_t>(std::max<std::size_t>(10, 2 * (order.p + order.q + s * (order.P + order.Q))),
	                          n / 4);
	if (long_ar < 1 || n < long_ar * 2 + 4) {
		return start; // too short for a useful start; zeros are safe
	}

	std::vector<double> design((n - long_ar) * long_ar);
	std::vector<double> target(n - long_ar);
	for (std::size_t t = long_ar; t < n; ++t) {
		for (std::size_t l = 0; l < long_ar; ++l) {
			design[(t - long_ar) * long_ar + l] = wc[t - 1 - l];
		}
		target[t - long_ar] = wc[t];
	}
	const auto ar_long = linalg::least_squares(design, n - long_ar, long_ar, target);

	std::vector<double> resid(n, 0.0);
	for (std::size_t t = long_ar; t < n; ++t) {
		double e = wc[t];
		for (std::size_t l = 0; l < long_ar; ++l) {
			e -= ar_long[l] * wc[t - 1 - l];
		}
		resid[t] = e;
	}

	const std::size_t cols = static_cast<std::size_t>(order.num_coeffs());
	if (cols == 0) {
		return start;
	}
	const std::size_t t0 = std::max<std::size_t>(
	    long_ar + std::max(order.q, s * order.Q) + 1,
	    static_cast<std::size_t>(std::max(order.p, s * order.P)));
	if (n <= t0 + cols + 2) {
		return start;
	}
	const std::size_t rows = n - t0;
	std::vector<double> x(rows * cols);
	std::vector<double> y(rows);
	for (std::size_t t = t0; t < n; ++t) {
		std::size_t c = 0;
		double* row = &x[(t - t0) * cols];
		for (int i = 1; i <= order.p; ++i) row[c++] = wc[t - i];
		for (int i = 1; i <= order.q; ++i) row[c++] = resid[t - i];
		for (int j = 1; j <= order.P; ++j) row[c++] = wc[t - j * s];
		for (int j = 1; j <= order.Q; ++j) row[c++] = resid[t - j * s];
		y[t - t0] = wc[t];
	}
	const auto beta = linalg::least_squares(x, rows, cols, y);
	std::size_t c = 0;
	for (int i = 0; i < order.p; ++i) start.ar[i] = beta[c++];
	for (int i = 0; i < order.q; ++i) start.ma[i] = beta[c++];
	for (int j = 0; j < order.P; ++j) start.sar[j] = beta[c++];
	for (int j = 0; j < order.Q; ++j) start.sma[j] = beta[c++];
	return start;
}

void enforce_fit_margins(SarimaParams& p) {
	enforce_root_margin(p.ar, kRootMargin);
	enforce_root_margin(p.sar, kRootMargin);
	// the same Schur-Cohn margin applies to 1 + theta B via negation
	auto enforce_ma = [](std::vector<double>& theta) {
		for (double& t : theta) t = -t;
		enforce_root_margin(theta, kRootMargin);
		for (double& t : theta) t = -t;
	};
	enforce_ma(p.ma);
	enforce_ma(p.sma);
}

} // namespace

double sarima_loglik(const SarimaOrder& order, const SarimaParams& params,
                     std::span<const double> series) {
	validate_order(order);
	const auto w = difference(series, order.d, order.D, order.s);
	std::vector<double> centered(w.size());
	for (std::size_t t = 0; t < w.size(); ++t) {
		centered[t] = w[t] - params.intercept;
	}
	const auto e = expand_sarima(order, params);
	ArmaKalman filter(e.phi, e.theta);
	const KalmanStats st = filter.filter(centered);
	const double s2 = params.sigma2;
	if (!(s2 > 0.0)) {
		throw DomainError("sarima_loglik needs sigma2 > 0");
	}
	return -0.5 * (static_cast<double>(st.nu) * (kLogTwoPi + std::log(s2)) + st.sumlog +
	               st.ssq / s2);
}

SarimaFit fit_sarima(std::span<const double> series, const SarimaOrder& order, FitMethod method,
                     int css_startup, const SarimaParams* warm_start) {
	validate_order(order);
	const std::size_t min_len =
	    10 + static_cast<std::size_t>(order.num_coeffs() + order.d + order.D * order.s);
	if (series.size() < min_len) {
		throw HistoryError("series of length " + std::to_string(series.size()) +
		                   " too short to fit " + order.to_string());
	}
	const auto w = difference(series, order.d, order.D, order.s);
	if (sd_of(w) == 0.0) {
		throw NumericsError("differenced series is constant; no likelihood to maximize");
	}

	ParamPacker packer{order, order.d + order.D == 0};
	const auto eval_params = [&](const SarimaParams& p) -> double {
		// negative concentrated log-likelihood (or its CSS approximation)
		std::vector<double> centered(w.size());
		for (std::size_t t = 0; t < w.size(); ++t) {
			centered[t] = w[t] - p.intercept;
		}
		const auto e = expand_sarima(order, p);
		if (method == FitMethod::CSS) {
			return -css_objective(e, centered, css_startup).loglik;
		}
		ArmaKalman filter(e.phi, e.theta);
		return -concentrated_loglik(filter.filter(centered));
	};

	SarimaParams fitted;
	bool converged = true;
	if (packer.dim() == 0) {
		fitted = SarimaParams{};
	} else if (order.num_coeffs() == 0 && packer.has_intercept) {
		fitted = SarimaParams{};
		fitted.intercept = mean_of(w); // exact ML for the pure-intercept model
	} else {
		const SarimaParams start =
		    warm_start != nullptr ? *warm_start : initial_params(order, w, packer.has_intercept);
		const auto x0 = packer.pack(start);
		const auto objective = [&](std::span<const double> x) -> double {
			try {
				return eval_params(packer.unpack(x));
			} catch (const NumericsError&) {
				return 1e100;
			} catch (const HistoryError&) {
				return 1e100;
			}
		};
		const bool css = method == FitMethod::CSS;
		const std::size_t max_iter = (css ? 150 : 250) * (packer.dim() + 1);
		const double tol = css ? 1e-3 : 2e-4;
		const double step0 = warm_start != nullptr ? 0.1 : 0.2;
		// fresh-simplex restarts from the incumbent recover from ridge stalls
		NmOutcome best = nelder_mead(objective, x0, step0, max_iter, tol);
		for (int restart = 0; restart < 2 && !best.converged; ++restart) {
			NmOutcome retry = nelder_mead(objective, best.x, 0.05, max_iter, tol);
			if (retry.value <= best.value) {
				best = std::move(retry);
			} else {
				break;
			}
		}
		if (!std::isfinite(best.value) || best.value >= 1e99) {
			throw ConvergenceError("optimizer found no admissible parameters for " +
			                       order.to_string());
		}
		converged = best.converged;
		fitted = packer.unpack(best.x);
	}
	if (!converged && method == FitMethod::ExactML) {
		throw ConvergenceError("optimizer did not converge for " + order.to_string());
	}

	enforce_fit_margins(fitted);

	// final evaluation with the (possibly margin-adjusted) coefficients
	std::vector<double> centered(w.size());
	for (std::size_t t = 0; t < w.size(); ++t) {
		centered[t] = w[t] - fitted.intercept;
	}
	const auto e = expand_sarima(order, fitted);
	double loglik = 0.0;
	std::size_t nu = 0;
	double ssq = 0.0;
	if (method == FitMethod::CSS) {
		const CssResult r = css_objective(e, centered, css_startup);
		if (!std::isfinite(r.loglik)) {
			throw NumericsError("CSS evaluation degenerate for " + order.to_string());
		}
		loglik = r.loglik;
		nu = r.nu;
		ssq = r.ssq;
	} else {
		ArmaKalman filter(e.phi, e.theta);
		const KalmanStats st = filter.filter(centered);
		loglik = concentrated_loglik(st);
		nu = st.nu;
		ssq = st.ssq;
	}

	SarimaFit fit;
	fit.order = order;
	fit.params = fitted;
	fit.params.sigma2 = ssq / static_cast<double>(nu);
	fit.has_intercept = packer.has_intercept;
	fit.loglik = loglik;
	const double k_free = static_cast<double>(packer.dim()) + 1.0; // + sigma^2
	fit.aic = 2.0 * k_free - 2.0 * loglik;
	fit.n_observations = w.size();
	return fit;
}

namespace {

// Differencing orders by variance reduction: difference while it shrinks the
// standard deviation by a clear factor.
std::pair<int, int> choose_differences(std::span<const double> series, int s, int max_d,
                                       int max_D) {
	int D = 0;
	std::vector<double> y(series.begin(), series.end());
	if (s > 1 && max_D >= 1 && static_cast<int>(y.size()) > 3 * s) {
		const double sd0 = sd_of(y);
		const auto ys = difference(y, 0, 1, s);
		if (sd0 > 0.0 && sd_of(ys) < 0.9 * sd0) {
			D = 1;
			y = ys;
		}
	}
	int d = 0;
	while (d < max_d && y.size() > 10) {
		const double sd0 = sd_of(y);
		if (sd0 == 0.0) {
			break;
		}
		const auto yd = difference(y, 1, 0, 1);
		if (sd_of(yd) < 0.95 * sd0) {
			++d;
			y = yd;
		} else {
			break;
		}
	}
	return {d, D};
}

} // namespace

SarimaFit auto_sarima(std::span<const double> series, int s, const AutoSarimaOptions& opts) {
	if (s < 1) {
		throw ContractError("auto_sarima needs s >= 1");
	}
	if (static_cast<int>(series.size()) < 3 * s || series.size() < 20) {
		throw HistoryError("auto_sarima needs at least max(3 seasons, 20) observations");
	}

	const auto [d, D] = choose_differences(series, s, opts.max_d, opts.max_D);

	// one startup offset across candidates keeps CSS scores comparable
	const int css_startup = opts.max_p + (s > 1 ? s * opts.max_P : 0);

	std::map<std::string, double> scored; // order -> CSS-AIC
	std::map<std::string, SarimaParams> css_params;
	std::vector<std::pair<double, SarimaOrder>> visited;
	auto css_score = [&](const SarimaOrder& o) -> double {
		const auto key = o.to_string();
		if (const auto it = scored.find(key); it != scored.end()) {
			return it->second;
		}
		double aic = std::numeric_limits<double>::infinity();
		try {
			SarimaFit fit = fit_sarima(series, o, FitMethod::CSS, css_startup);
			aic = fit.aic;
			css_params.emplace(key, std::move(fit.params));
		} catch (const std::runtime_error&) {
			// inadmissible or failed candidate; leave +inf
		}
		scored.emplace(key, aic);
		visited.emplace_back(aic, o);
		return aic;
	};

	const bool seasonal = s > 1;
	std::vector<SarimaOrder> pool;
	auto consider_for_pool = [&](const SarimaOrder& o) {
		if (std::find(pool.begin(), pool.end(), o) == pool.end()) {
			pool.push_back(o);
		}
	};

	if (opts.exhaustive) {
		// full grid, differencing orders included; CSS ranks, exact ML refits
		std::vector<std::pair<double, SarimaOrder>> ranked;
		for (int dd = 0; dd <= opts.max_d; ++dd) {
			for (int DD = 0; DD <= (seasonal ? opts.max_D : 0); ++DD) {
				for (int p = 0; p <= opts.max_p; ++p) {
					for (int q = 0; q <= opts.max_q; ++q) {
						for (int P = 0; P <= (seasonal ? opts.max_P : 0); ++P) {
							for (int Q = 0; Q <= (seasonal ? opts.max_Q : 0); ++Q) {
								const SarimaOrder o{p, dd, q, P, DD, Q, s};
								ranked.emplace_back(css_score(o), o);
							}
						}
					}
				}
			}
		}
		std::sort(ranked.begin(), ranked.end(),
		          [](const auto& a, const auto& b) { return a.first < b.first; });
		for (std::size_t i = 0; i < ranked.size() && i < 8; ++i) {
			if (std::isfinite(ranked[i].first)) {
				consider_for_pool(ranked[i].second);
			}
		}
	} else {
		// Hyndman-Khandakar style stepwise neighbourhood walk
		auto clip = [&](int v, int hi) { return std::clamp(v, 0, hi); };
		std::vector<SarimaOrder> start{
		    SarimaOrder{clip(2, opts.max_p), d, clip(2, opts.max_q), seasonal ? 1 : 0, D,
		                seasonal ? 1 : 0, s},
		    SarimaOrder{0, d, 0, 0, D, 0, s},
		    SarimaOrder{1, d, 0, seasonal ? 1 : 0, D, 0, s},
		    SarimaOrder{0, d, 1, 0, D, seasonal ? 1 : 0, s},
		};
		SarimaOrder best = start.front();
		double best_aic = std::numeric_limits<double>::infinity();
		for (const auto& o : start) {
			const double aic = css_score(o);
			if (aic < best_aic) {
				best_aic = aic;
				best = o;
			}
		}
		for (int round = 0; round < 12; ++round) {
			bool improved = false;
			std::vector<SarimaOrder> moves;
			for (const int dp : {-1, 1}) {
				moves.push_back({best.p + dp, d, best.q, best.P, D, best.Q, s});
				moves.push_back({best.p, d, best.q + dp, best.P, D, best.Q, s});
				moves.push_back({best.p + dp, d, best.q + dp, best.P, D, best.Q, s});
				if (seasonal) {
					moves.push_back({best.p, d, best.q, best.P + dp, D, best.Q, s});
					moves.push_back({best.p, d, best.q, best.P, D, best.Q + dp, s});
				}
			}
			for (const auto& o : moves) {
				if (o.p < 0 || o.p > opts.max_p || o.q < 0 || o.q > opts.max_q || o.P < 0 ||
				    o.P > opts.max_P || o.Q < 0 || o.Q > opts.max_Q) {
					continue;
				}
				const double aic = css_score(o);
				if (aic < best_aic - 1e-9) {
					best_aic = aic;
					best = o;
					improved = true;
				}
			}
			if (!improved) {
				break;
			}
		}
		std::sort(visited.begin(), visited.end(),
		          [](const auto& a, const auto& b) { return a.first < b.first; });
		for (const auto& [aic, o] : visited) {
			if (std::isfinite(aic) && pool.size() < 3) {
				consider_for_pool(o);
			}
		}
	}

	// the white-noise fit anchors the pool: the returned AIC never exceeds it
	consider_for_pool(SarimaOrder{0, d, 0, 0, D, 0, s});
	consider_for_pool(SarimaOrder{0, 0, 0, 0, 0, 0, s});

	std::optional<SarimaFit> best_fit;
	for (const auto& o : pool) {
		try {
			const auto warm = css_params.find(o.to_string());
			SarimaFit fit = fit_sarima(series, o, FitMethod::ExactML, -1,
			                           warm != css_params.end() ? &warm->second : nullptr);
			if (!best_fit || fit.aic < best_fit->aic) {
				best_fit = std::move(fit);
			}
		} catch (const std::runtime_error&) {
			// candidate failed; keep going
		}
	}
	if (!best_fit) {
		throw ConvergenceError("auto_sarima: every candidate order failed to fit");
	}
	return *best_fit;
}

ForecastDistribution sarima_forecast(const SarimaFit& fit, std::span<const double> series,
                                     std::int64_t horizon) {
	if (horizon < 1) {
		throw ContractError("forecast horizon must be >= 1");
	}
	const SarimaOrder& o = fit.order;
	const auto w = difference(series, o.d, o.D, o.s);
	std::vector<double> centered(w.size());
	for (std::size_t t = 0; t < w.size(); ++t) {
		centered[t] = w[t] - fit.params.intercept;
	}
	const auto e = expand_sarima(o, fit.params);
	ArmaKalman filter(e.phi, e.theta);
	filter.filter(centered);

	std::vector<double> point_w(horizon), sigma_w(horizon);
	for (std::int64_t h = 0; h < horizon; ++h) {
		const auto [mean_c, var_unit] = filter.predict_step();
		point_w[h] = mean_c + fit.params.intercept;
		sigma_w[h] = std::sqrt(std::max(0.0, var_unit * fit.params.sigma2));
	}

	if (o.d == 0 && o.D == 0) {
		return ForecastDistribution::gaussian(std::move(point_w), std::move(sigma_w));
	}

	// integrate the point path and the +0.675 sigma band path; integration is
	// affine, so the band stays symmetric and maps back to a sigma per step
	constexpr double kZ75 = 0.6744897501960817;
	std::vector<double> upper_w(horizon);
	for (std::int64_t h = 0; h < horizon; ++h) {
		upper_w[h] = point_w[h] + kZ75 * sigma_w[h];
	}
	auto point = integrate(point_w, series, o.d, o.D, o.s);
	const auto upper = integrate(upper_w, series, o.d, o.D, o.s);
	std::vector<double> sigma(horizon);
	for (std::int64_t h = 0; h < horizon; ++h) {
		sigma[h] = std::max(0.0, (upper[h] - point[h]) / kZ75);
	}
	return ForecastDistribution::gaussian(std::move(point), std::move(sigma));
}

std::string sarima_fit_to_json(const SarimaFit& fit) {
	nlohmann::ordered_json j;
	j["order"] = {{"p", fit.order.p}, {"d", fit.order.d}, {"q", fit.order.q},
	              {"P", fit.order.P}, {"D", fit.order.D}, {"Q", fit.order.Q},
	              {"s", fit.order.s}};
	j["ar"] = fit.params.ar;
	j["ma"] = fit.params.ma;
	j["sar"] = fit.params.sar;
	j["sma"] = fit.params.sma;
	if (fit.has_intercept) {
		j["intercept"] = fit.params.intercept;
	}
	j["sigma2"] = fit.params.sigma2;
	j["loglik"] = fit.loglik;
	j["aic"] = fit.aic;
	j["n_observations"] = fit.n_observations;
	return j.dump(2) + "\n";
}

} // namespace demandcast
