#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace demandcast::ad {

// Dense 64-bit float tensor, 1-D or 2-D, row-major. Gradients live next to
// the values so parameters persist across the per-step graphs.
struct TensorData {
	std::vector<std::size_t> shape;
	std::vector<double> value;
	std::vector<double> grad; // sized on demand, zeroed when allocated
	bool requires_grad = false;
	std::string name;

	std::size_t size() const { return value.size(); }
	std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
	std::size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }
	bool is_scalar() const { return size() == 1; }

	void ensure_grad();
	void zero_grad();
};

using Tensor = std::shared_ptr<TensorData>;

Tensor make_tensor(std::vector<std::size_t> shape, bool requires_grad = false,
                   std::string name = {});
Tensor make_tensor(std::vector<std::size_t> shape, std::vector<double> values,
                   bool requires_grad = false, std::string name = {});
// exact match for braced value lists, so they never bind to requires_grad
inline Tensor make_tensor(std::vector<std::size_t> shape, std::initializer_list<double> values,
                          bool requires_grad = false, std::string name = {}) {
	return make_tensor(std::move(shape), std::vector<double>(values), requires_grad,
	                   std::move(name));
}
Tensor make_scalar(double v);

// Uniform(-limit, limit) fill; limit = sqrt(6 / (fan_in + fan_out)) is the
// dense-layer default.
void fill_uniform(TensorData& t, double limit, std::mt19937_64& rng);

// Tape of op records in construction order, which is already topological.
// One graph is single-threaded and lives for one forward/backward pass.
class Graph {
public:
	void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn);

	// Seeds d(loss)/d(loss) = 1 and runs every backward rule exactly once in
	// reverse order. Throws ContractError unless `loss` is scalar.
	void backward(const Tensor& loss);

	std::size_t size() const { return nodes_.size(); }

private:
	struct Node {
		std::vector<Tensor> inputs;
		Tensor output;
		std::function<void()> backward_fn;
	};
	std::vector<Node> nodes_;
};

// ---- forward ops -----------------------------------------------------------
// Binary elementwise ops require identical flat sizes except where noted.
// Every op appends its backward rule to the graph.

Tensor matmul(Graph& g, const Tensor& a, const Tensor& b);
// same shape, or [m x n] + [n] row-vector broadcast
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);
Tensor scale(Graph& g, const Tensor& a, double c);
Tensor relu(Graph& g, const Tensor& a);
Tensor sigmoid(Graph& g, const Tensor& a);
Tensor tanh_op(Graph& g, const Tensor& a);
Tensor softplus(Graph& g, const Tensor& a);
// |x| with subgradient sign(x); the mean-absolute-error building block.
Tensor abs_op(Graph& g, const Tensor& a);
// x + c elementwise for a fixed constant.
Tensor shift(Graph& g, const Tensor& a, double c);
// Inverted dropout; identity when training is false.
Tensor dropout(Graph& g, const Tensor& a, double p, bool training, std::mt19937_64& rng);
// table [vocab x embed_dim], ids in [0, vocab) -> [ids.size() x embed_dim]
Tensor embed_lookup(Graph& g, const Tensor& table, const std::vector<std::size_t>& ids);
Tensor concat_cols(Graph& g, const std::vector<Tensor>& parts);
Tensor concat_rows(Graph& g, const std::vector<Tensor>& parts);
Tensor slice_cols(Graph& g, const Tensor& a, std::size_t from, std::size_t to);
Tensor reduce_sum(Graph& g, const Tensor& a);
Tensor reduce_mean(Graph& g, const Tensor& a);

// Elementwise -log NB(y_i; mu_i, alpha_i); mu and alpha must be flat-size
// compatible with y.
Tensor nb_nll(Graph& g, const std::vector<std::int64_t>& y, const Tensor& mu, const Tensor& alpha);

// Scalar -log N(z; mu, diag(d) + v v^T) through the O(N r^2) evaluation.
Tensor lowrank_nll(Graph& g, const std::vector<double>& z, const Tensor& mu, const Tensor& d,
                   const Tensor& v, std::size_t rank);

// ---- optimizer -------------------------------------------------------------

// Adam with bias correction; defaults follow the usual beta/epsilon values.
class AdamState {
public:
	explicit AdamState(double learning_rate = 1e-3) : lr_(learning_rate) {}

	// One update over `params` from their current .grad buffers. Throws
	// NumericsError (naming the parameter) on non-finite gradients.
	void step(const std::vector<Tensor>& params);

	std::int64_t steps_taken() const { return step_; }
	double learning_rate() const { return lr_; }

private:
	struct Moments {
		std::vector<double> m;
		std::vector<double> v;
	};
	double lr_;
	double beta1_ = 0.9;
	double beta2_ = 0.999;
	double eps_ = 1e-8;
	std::int64_t step_ = 0;
	std::map<const TensorData*, Moments> moments_;
};

// Scales all grads so their global L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_norm(const std::vector<Tensor>& params, double max_norm);

void zero_all_grads(const std::vector<Tensor>& params);

} // namespace demandcast::ad
