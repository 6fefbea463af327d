#include "demandcast/tensor.hpp"

#include "demandcast/distributions.hpp"
#include "demandcast/errors.hpp"
#include "demandcast/linalg.hpp"

#include <cmath>
#include <numeric>

namespace demandcast::ad {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
	return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_str(const std::vector<std::size_t>& shape) {
	std::string s = "[";
	for (std::size_t i = 0; i < shape.size(); ++i) {
		if (i) s += "x";
		s += std::to_string(shape[i]);
	}
	return s + "]";
}

[[noreturn]] void shape_error(const std::string& op, const TensorData& a, const TensorData& b) {
	throw ShapeError(op + ": incompatible shapes " + shape_str(a.shape) + " and " +
	                 shape_str(b.shape));
}

bool any_requires_grad(const std::vector<Tensor>& ts) {
	for (const auto& t : ts) {
		if (t->requires_grad) return true;
	}
	return false;
}

Tensor result_like(const std::vector<std::size_t>& shape, const std::vector<Tensor>& inputs) {
	auto out = make_tensor(shape);
	out->requires_grad = any_requires_grad(inputs);
	return out;
}

// elementwise unary helper: fwd(x) and dfdx expressed via (x, y)
Tensor unary_op(Graph& g, const Tensor& a, double (*fwd)(double), double (*dydx)(double, double)) {
	auto out = result_like(a->shape, {a});
	for (std::size_t i = 0; i < a->size(); ++i) {
		out->value[i] = fwd(a->value[i]);
	}
	g.record({a}, out, [a, out, dydx] {
		if (!a->requires_grad) return;
		a->ensure_grad();
		for (std::size_t i = 0; i < a->size(); ++i) {
			a->grad[i] += out->grad[i] * dydx(a->value[i], out->value[i]);
		}
	});
	return out;
}

double sigmoid_scalar(double x) {
	if (x >= 0.0) {
		return 1.0 / (1.0 + std::exp(-x));
	}
	const double e = std::exp(x);
	return e / (1.0 + e);
}

double softplus_scalar(double x) {
	if (x > 30.0) return x;
	if (x < -30.0) return std::exp(x);
	return std::log1p(std::exp(x));
}

} // namespace

void TensorData::ensure_grad() {
	if (grad.size() != value.size()) {
		grad.assign(value.size(), 0.0);
	}
}

void TensorData::zero_grad() {
	grad.assign(value.size(), 0.0);
}

Tensor make_tensor(std::vector<std::size_t> shape, bool requires_grad, std::string name) {
	auto t = std::make_shared<TensorData>();
	t->shape = std::move(shape);
	t->value.assign(shape_product(t->shape), 0.0);
	t->requires_grad = requires_grad;
	t->name = std::move(name);
	return t;
}

Tensor make_tensor(std::vector<std::size_t> shape, std::vector<double> values, bool requires_grad,
                   std::string name) {
	auto t = std::make_shared<TensorData>();
	t->shape = std::move(shape);
	if (values.size() != shape_product(t->shape)) {
		throw ShapeError("make_tensor: " + std::to_string(values.size()) + " values for shape " +
		                 shape_str(t->shape));
	}
	t->value = std::move(values);
	t->requires_grad = requires_grad;
	t->name = std::move(name);
	return t;
}

Tensor make_scalar(double v) {
	return make_tensor({1}, {v});
}

void fill_uniform(TensorData& t, double limit, std::mt19937_64& rng) {
	std::uniform_real_distribution<double> dist(-limit, limit);
	for (double& v : t.value) {
		v = dist(rng);
	}
}

void Graph::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn) {
	if (output->requires_grad) {
		output->ensure_grad();
	}
	nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward_fn)});
}

void Graph::backward(const Tensor& loss) {
	if (!loss->is_scalar()) {
		throw ContractError("backward() needs a scalar loss, got " + shape_str(loss->shape));
	}
	loss->ensure_grad();
	loss->grad[0] = 1.0;
	for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
		if (it->output->requires_grad) {
			it->backward_fn();
		}
	}
}

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
	if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0]) {
		shape_error("matmul", *a, *b);
	}
	const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
	auto out = result_like({m, n}, {a, b});
	linalg::matmul(a->value, b->value, out->value, m, k, n);
	g.record({a, b}, out, [a, b, out, m, k, n] {
		const auto& go = out->grad;
		if (a->requires_grad) {
			a->ensure_grad();
			for (std::size_t i = 0; i < m; ++i) {
				for (std::size_t kk = 0; kk < k; ++kk) {
					double s = 0.0;
					for (std::size_t j = 0; j < n; ++j) {
						s += go[i * n + j] * b->value[kk * n + j];
					}
					a->grad[i * k + kk] += s;
				}
			}
		}
		if (b->requires_grad) {
			b->ensure_grad();
			for (std::size_t i = 0; i < m; ++i) {
				for (std::size_t kk = 0; kk < k; ++kk) {
					const double av = a->value[i * k + kk];
					if (av == 0.0) continue;
					for (std::size_t j = 0; j < n; ++j) {
						b->grad[kk * n + j] += av * go[i * n + j];
					}
				}
			}
		}
	});
	return out;
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
	const bool same = a->size() == b->size();
	const bool row_broadcast = a->shape.size() == 2 && b->size() == a->cols();
	if (!same && !row_broadcast) {
		shape_error("add", *a, *b);
	}
	auto out = result_like(a->shape, {a, b});
	if (same) {
		for (std::size_t i = 0; i < a->size(); ++i) {
			out->value[i] = a->value[i] + b->value[i];
		}
	} else {
		const std::size_t n = a->cols();
		for (std::size_t i = 0; i < a->rows(); ++i) {
			for (std::size_t j = 0; j < n; ++j) {
				out->value[i * n + j] = a->value[i * n + j] + b->value[j];
			}
		}
	}
	g.record({a, b}, out, [a, b, out, same] {
		if (a->requires_grad) {
			a->ensure_grad();
			for (std::size_t i = 0; i < a->size(); ++i) {
				a->grad[i] += out->grad[i];
			}
		}
		if (b->requires_grad) {
			b->ensure_grad();
			if (same) {
				for (std::size_t i = 0; i < b->size(); ++i) {
					b->grad[i] += out->grad[i];
				}
			} else {
				const std::size_t n = a->cols();
				for (std::size_t i = 0; i < a->rows(); ++i) {
					for (std::size_t j = 0; j < n; ++j) {
						b->grad[j] += out->grad[i * n + j];
					}
				}
			}
		}
	});
	return out;
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
	return add(g, a, scale(g, b, -1.0));
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
	if (a->size() != b->size()) {
		shape_error("mul", *a, *b);
	}
	auto out = result_like(a->shape, {a, b});
	for (std::size_t i = 0; i < a->size(); ++i) {
		out->value[i] = a->value[i] * b->value[i];
	}
	g.record({a, b}, out, [a, b, out] {
		if (a->requires_grad) {
			a->ensure_grad();
			for (std::size_t i = 0; i < a->size(); ++i) {
				a->grad[i] += out->grad[i] * b->value[i];
			}
		}
		if (b->requires_grad) {
			b->ensure_grad();
			for (std::size_t i = 0; i < b->size(); ++i) {
				b->grad[i] += out->grad[i] * a->value[i];
			}
		}
	});
	return out;
}

Tensor scale(Graph& g, const Tensor& a, double c) {
	auto out = result_like(a->shape, {a});
	for (std::size_t i = 0; i < a->size(); ++i) {
		out->value[i] = a->value[i] * c;
	}
	g.record({a}, out, [a, out, c] {
		if (!a->requires_grad) return;
		a->ensure_grad();
		for (std::size_t i = 0; i < a->size(); ++i) {
			a->grad[i] += out->grad[i] * c;
		}
	});
	return out;
}

Tensor relu(Graph& g, const Tensor& a) {
	return unary_op(
	    g, a, [](double x) { return x > 0.0 ? x : 0.0; },
	    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(Graph& g, const Tensor& a) {
	return unary_op(
	    g, a, +[](double x) { return sigmoid_scalar(x); },
	    [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(Graph& g, const Tensor& a) {
	return unary_op(
	    g, a, +[](double x) { return std::tanh(x); },
	    [](double, double y) { return 1.0 - y * y; });
}

Tensor softplus(Graph& g, const Tensor& a) {
	return unary_op(
	    g, a, +[](double x) { return softplus_scalar(x); },
	    [](double x, double) { return sigmoid_scalar(x); });
}

Tensor abs_op(Graph& g, const Tensor& a) {
	return unary_op(
	    g, a, +[](double x) { return std::fabs(x); },
	    [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor shift(Graph& g, const Tensor& a, double c) {
	auto out = result_like(a->shape, {a});
	for (std::size_t i = 0; i < a->size(); ++i) {
		out->value[i] = a->value[i] + c;
	}
	g.record({a}, out, [a, out] {
		if (!a->requires_grad) return;
		a->ensure_grad();
		for (std::size_t i = 0; i < a->size(); ++i) {
			a->grad[i] += out->grad[i];
		}
	});
	return out;
}

Tensor dropout(Graph& g, const Tensor& a, double p, bool training, std::mt19937_64& rng) {
	if (p < 0.0 || p >= 1.0) {
		throw ContractError("dropout rate must be in [0, 1)");
	}
	if (!training || p == 0.0) {
		return a; // eval mode is the identity
	}
	auto mask = std::make_shared<std::vector<double>>(a->size());
	std::bernoulli_distribution keep(1.0 - p);
	const double inv_keep = 1.0 / (1.0 - p);
	for (auto& m : *mask) {
		m = keep(rng) ? inv_keep : 0.0;
	}
	auto out = result_like(a->shape, {a});
	for (std::size_t i = 0; i < a->size(); ++i) {
		out->value[i] = a->value[i] * (*mask)[i];
	}
	g.record({a}, out, [a, out, mask] {
		if (!a->requires_grad) return;
		a->ensure_grad();
		for (std::size_t i = 0; i < a->size(); ++i) {
			a->grad[i] += out->grad[i] * (*mask)[i];
		}
	});
	return out;
}

Tensor embed_lookup(Graph& g, const Tensor& table, const std::vector<std::size_t>& ids) {
	if (table->shape.size() != 2) {
		throw ShapeError("embed_lookup: table must be 2-D, got " + shape_str(table->shape));
	}
	const std::size_t vocab = table->shape[0], dim = table->shape[1];
	auto out = result_like({ids.size(), dim}, {table});
	for (std::size_t i = 0; i < ids.size(); ++i) {
		if (ids[i] >= vocab) {
			throw ShapeError("embed_lookup: id " + std::to_string(ids[i]) + " out of vocab " +
			                 std::to_string(vocab));
		}
		std::copy_n(&table->value[ids[i] * dim], dim, &out->value[i * dim]);
	}
	auto ids_copy = std::make_shared<std::vector<std::size_t>>(ids);
	g.record({table}, out, [table, out, ids_copy, dim] {
		if (!table->requires_grad) return;
		table->ensure_grad();
		for (std::size_t i = 0; i < ids_copy->size(); ++i) {
			double* dst = &table->grad[(*ids_copy)[i] * dim];
			const double* src = &out->grad[i * dim];
			for (std::size_t j = 0; j < dim; ++j) {
				dst[j] += src[j];
			}
		}
	});
	return out;
}

Tensor concat_cols(Graph& g, const std::vector<Tensor>& parts) {
	if (parts.empty()) {
		throw ContractError("concat_cols of zero tensors");
	}
	const std::size_t m = parts.front()->rows();
	std::size_t total = 0;
	for (const auto& p : parts) {
		if (p->rows() != m) {
			shape_error("concat_cols", *parts.front(), *p);
		}
		total += p->cols();
	}
	auto out = result_like({m, total}, parts);
	std::size_t off = 0;
	for (const auto& p : parts) {
		const std::size_t w = p->cols();
		for (std::size_t i = 0; i < m; ++i) {
			std::copy_n(&p->value[i * w], w, &out->value[i * total + off]);
		}
		off += w;
	}
	g.record(parts, out, [parts, out, m, total] {
		std::size_t off = 0;
		for (const auto& p : parts) {
			const std::size_t w = p->cols();
			if (p->requires_grad) {
				p->ensure_grad();
				for (std::size_t i = 0; i < m; ++i) {
					for (std::size_t j = 0; j < w; ++j) {
						p->grad[i * w + j] += out->grad[i * total + off + j];
					}
				}
			}
			off += w;
		}
	});
	return out;
}

Tensor concat_rows(Graph& g, const std::vector<Tensor>& parts) {
	if (parts.empty()) {
		throw ContractError("concat_rows of zero tensors");
	}
	const std::size_t n = parts.front()->cols();
	std::size_t rows = 0;
	for (const auto& p : parts) {
		if (p->cols() != n) {
			shape_error("concat_rows", *parts.front(), *p);
		}
		rows += p->rows();
	}
	auto out = result_like({rows, n}, parts);
	std::size_t off = 0;
	for (const auto& p : parts) {
		std::copy(p->value.begin(), p->value.end(), out->value.begin() + off);
		off += p->size();
	}
	g.record(parts, out, [parts, out] {
		std::size_t off = 0;
		for (const auto& p : parts) {
			if (p->requires_grad) {
				p->ensure_grad();
				for (std::size_t i = 0; i < p->size(); ++i) {
					p->grad[i] += out->grad[off + i];
				}
			}
			off += p->size();
		}
	});
	return out;
}

Tensor slice_cols(Graph& g, const Tensor& a, std::size_t from, std::size_t to) {
	if (a->shape.size() != 2 || from >= to || to > a->cols()) {
		throw ShapeError("slice_cols: [" + std::to_string(from) + ", " + std::to_string(to) +
		                 ") of " + shape_str(a->shape));
	}
	const std::size_t m = a->rows(), n = a->cols(), w = to - from;
	auto out = result_like({m, w}, {a});
	for (std::size_t i = 0; i < m; ++i) {
		std::copy_n(&a->value[i * n + from], w, &out->value[i * w]);
	}
	g.record({a}, out, [a, out, m, n, w, from] {
		if (!a->requires_grad) return;
		a->ensure_grad();
		for (std::size_t i = 0; i < m; ++i) {
			for (std::size_t j = 0; j < w; ++j) {
				a->grad[i * n + from + j] += out->grad[i * w + j];
			}
		}
	});
	return out;
}

Tensor reduce_sum(Graph& g, const Tensor& a) {
	auto out = result_like({1}, {a});
	double s = 0.0;
	for (const double v : a->value) {
		s += v;
	}
	out->value[0] = s;
	g.record({a}, out, [a, out] {
		if (!a->requires_grad) return;
		a->ensure_grad();
		for (std::size_t i = 0; i < a->size(); ++i) {
			a->grad[i] += out->grad[0];
		}
	});
	return out;
}

Tensor reduce_mean(Graph& g, const Tensor& a) {
	const double inv_n = 1.0 / static_cast<double>(a->size());
	return scale(g, reduce_sum(g, a), inv_n);
}

Tensor nb_nll(Graph& g, const std::vector<std::int64_t>& y, const Tensor& mu, const Tensor& alpha) {
	if (mu->size() != y.size() || alpha->size() != y.size()) {
		throw ShapeError("nb_nll: y, mu, alpha sizes differ");
	}
	auto out = result_like({y.size()}, {mu, alpha});
	for (std::size_t i = 0; i < y.size(); ++i) {
		out->value[i] = -neg_binomial_logpdf(y[i], mu->value[i], alpha->value[i]);
	}
	auto y_copy = std::make_shared<std::vector<std::int64_t>>(y);
	g.record({mu, alpha}, out, [mu, alpha, out, y_copy] {
		for (std::size_t i = 0; i < y_copy->size(); ++i) {
			const NbGrad d = neg_binomial_logpdf_grad((*y_copy)[i], mu->value[i], alpha->value[i]);
			if (mu->requires_grad) {
				mu->ensure_grad();
				mu->grad[i] += out->grad[i] * -d.d_mu;
			}
			if (alpha->requires_grad) {
				alpha->ensure_grad();
				alpha->grad[i] += out->grad[i] * -d.d_alpha;
			}
		}
	});
	return out;
}

Tensor lowrank_nll(Graph& g, const std::vector<double>& z, const Tensor& mu, const Tensor& d,
                   const Tensor& v, std::size_t rank) {
	const std::size_t n = z.size();
	if (mu->size() != n || d->size() != n || v->size() != n * rank) {
		throw ShapeError("lowrank_nll: inconsistent shapes");
	}
	auto out = result_like({1}, {mu, d, v});
	out->value[0] = -lowrank_gaussian_logpdf(z, mu->value, d->value, v->value, rank);
	auto z_copy = std::make_shared<std::vector<double>>(z);
	g.record({mu, d, v}, out, [mu, d, v, out, z_copy, rank] {
		const LowRankGrad grads =
		    lowrank_gaussian_logpdf_grad(*z_copy, mu->value, d->value, v->value, rank);
		const double go = out->grad[0];
		if (mu->requires_grad) {
			mu->ensure_grad();
			for (std::size_t i = 0; i < mu->size(); ++i) {
				mu->grad[i] += go * -grads.d_mu[i];
			}
		}
		if (d->requires_grad) {
			d->ensure_grad();
			for (std::size_t i = 0; i < d->size(); ++i) {
				d->grad[i] += go * -grads.d_d[i];
			}
		}
		if (v->requires_grad) {
			v->ensure_grad();
			for (std::size_t i = 0; i < v->size(); ++i) {
				v->grad[i] += go * -grads.d_v[i];
			}
		}
	});
	return out;
}

void AdamState::step(const std::vector<Tensor>& params) {
	++step_;
	const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
	const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
	for (const auto& p : params) {
		p->ensure_grad();
		auto& mom = moments_[p.get()];
		if (mom.m.size() != p->size()) {
			mom.m.assign(p->size(), 0.0);
			mom.v.assign(p->size(), 0.0);
		}
		for (std::size_t i = 0; i < p->size(); ++i) {
			const double gi = p->grad[i];
			if (!std::isfinite(gi)) {
				throw NumericsError("non-finite gradient in parameter '" +
				                    (p->name.empty() ? std::string("<unnamed>") : p->name) + "'");
			}
			mom.m[i] = beta1_ * mom.m[i] + (1.0 - beta1_) * gi;
			mom.v[i] = beta2_ * mom.v[i] + (1.0 - beta2_) * gi * gi;
			const double mhat = mom.m[i] / bc1;
			const double vhat = mom.v[i] / bc2;
			p->value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
		}
	}
}

double clip_global_norm(const std::vector<Tensor>& params, double max_norm) {
	double sq = 0.0;
	for (const auto& p : params) {
		p->ensure_grad();
		for (const double gi : p->grad) {
			sq += gi * gi;
		}
	}
	const double norm = std::sqrt(sq);
	if (norm > max_norm && norm > 0.0) {
		const double f = max_norm / norm;
		for (const auto& p : params) {
			for (double& gi : p->grad) {
				gi *= f;
			}
		}
	}
	return norm;
}

void zero_all_grads(const std::vector<Tensor>& params) {
	for (const auto& p : params) {
		p->zero_grad();
	}
}

} // namespace demandcast::ad
