#include "demandcast/errors.hpp"
#include "demandcast/linalg.hpp"
#include "demandcast/rng.hpp"
#include "demandcast/tensor.hpp"

#include "grad_check.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace demandcast;
using namespace demandcast::ad;

namespace {

Tensor random_param(std::vector<std::size_t> shape, std::mt19937_64& rng, double limit = 1.0,
                    const std::string& name = "p") {
	auto t = make_tensor(std::move(shape), true, name);
	fill_uniform(*t, limit, rng);
	return t;
}

// loss = sum(out * fixed_random_weights) so every element matters
Tensor weighted_sum(Graph& g, const Tensor& out, std::mt19937_64& rng) {
	auto w = make_tensor(out->shape);
	fill_uniform(*w, 1.0, rng);
	return reduce_sum(g, mul(g, out, w));
}

} // namespace

TEST_CASE("forward examples") {
	Graph g;
	auto x = make_tensor({3}, {0.0, -3.0, 3.0});
	auto s = sigmoid(g, x);
	CHECK(s->value[0] == doctest::Approx(0.5));
	auto r = relu(g, x);
	CHECK(r->value[1] == 0.0);
	CHECK(r->value[2] == 3.0);

	// 2x3 by 3x1 against the naive triple loop
	auto a = make_tensor({2, 3}, {1, 2, 3, 4, 5, 6});
	auto b = make_tensor({3, 1}, {7, 8, 9});
	auto c = matmul(g, a, b);
	CHECK(c->shape == std::vector<std::size_t>{2, 1});
	double oracle[2] = {0, 0};
	for (int i = 0; i < 2; ++i) {
		for (int k = 0; k < 3; ++k) {
			oracle[i] += a->value[i * 3 + k] * b->value[k];
		}
	}
	CHECK(c->value[0] == doctest::Approx(oracle[0]));
	CHECK(c->value[1] == doctest::Approx(oracle[1]));

	CHECK_THROWS_AS(matmul(g, a, a), ShapeError);
}

TEST_CASE("backward basics") {
	// identity loss
	{
		Graph g;
		auto x = make_tensor({1}, {4.0}, true);
		auto y = scale(g, x, 1.0);
		g.backward(y);
		CHECK(x->grad[0] == doctest::Approx(1.0));
	}
	// d(x^2)/dx at 3 is 6
	{
		Graph g;
		auto x = make_tensor({1}, {3.0}, true);
		auto y = mul(g, x, x);
		g.backward(y);
		CHECK(x->grad[0] == doctest::Approx(6.0));
	}
	// non-scalar loss rejected
	{
		Graph g;
		auto x = make_tensor({2}, {1.0, 2.0}, true);
		auto y = scale(g, x, 2.0);
		CHECK_THROWS_AS(g.backward(y), ContractError);
	}
}

TEST_CASE("finite differences over every op, 20 random instances") {
	std::mt19937_64 rng(31);
	for (int inst = 0; inst < 20; ++inst) {
		auto a = random_param({3, 4}, rng, 1.0, "a");
		auto b = random_param({4, 2}, rng, 1.0, "b");
		auto c = random_param({3, 4}, rng, 1.0, "c");
		auto row = random_param({4}, rng, 1.0, "row");
		auto table = random_param({5, 3}, rng, 1.0, "table");
		const std::vector<std::size_t> ids{0, 2, 4, 2};
		const std::uint64_t mask_seed = rng();

		auto build = [&](bool backward) {
			Graph g;
			auto mm = matmul(g, a, b);                   // 3x2
			auto ab = add(g, a, c);                      // 3x4
			auto abr = add(g, ab, row);                  // broadcast
			auto el = mul(g, abr, c);                    // elementwise
			auto sc = scale(g, el, 0.7);
			auto act1 = relu(g, shift(g, sc, 0.3));
			auto act2 = sigmoid(g, sc);
			auto act3 = tanh_op(g, sc);
			auto act4 = softplus(g, sc);
			auto act5 = abs_op(g, shift(g, sc, 0.11));
			auto emb = embed_lookup(g, table, ids);      // 4x3
			auto cat = concat_cols(g, {act1, act2});     // 3x8
			auto cat2 = concat_rows(g, {act3, act4, act5}); // 9x4
			auto sl = slice_cols(g, cat, 1, 6);
			auto dr_rng = make_engine(mask_seed);        // fixed mask across FD evals
			auto dr = dropout(g, cat2, 0.25, true, dr_rng);

			std::mt19937_64 wrng(1234 + inst);
			auto l1 = weighted_sum(g, mm, wrng);
			auto l2 = weighted_sum(g, sl, wrng);
			auto l3 = weighted_sum(g, dr, wrng);
			auto l4 = weighted_sum(g, emb, wrng);
			auto loss =
			    reduce_mean(g, concat_rows(g, {l1, l2, l3, l4, reduce_sum(g, mm)}));
			if (backward) {
				g.backward(loss);
			}
			return loss->value[0];
		};

		const auto res = gradcheck::check([&] { return build(true); }, [&] { return build(false); },
		                                  {a, b, c, row, table});
		CHECK(res.max_rel_error < 1e-4);
		CHECK(res.checked == 12 + 8 + 12 + 4 + 15);
	}
}

TEST_CASE("dropout in eval mode is the identity") {
	std::mt19937_64 rng(5);
	Graph g;
	auto x = random_param({6, 6}, rng);
	auto y = dropout(g, x, 0.5, false, rng);
	CHECK(y->value == x->value);
	// and in training mode it rescales kept entries by 1/(1-p)
	auto z = dropout(g, x, 0.5, true, rng);
	for (std::size_t i = 0; i < x->size(); ++i) {
		const double ratio = z->value[i] / x->value[i];
		CHECK((std::fabs(ratio) < 1e-12 || std::fabs(ratio - 2.0) < 1e-12));
	}
}

TEST_CASE("adam step examples") {
	// zero gradient leaves parameters unchanged
	{
		auto p = make_tensor({3}, {1.0, 2.0, 3.0}, true, "w");
		p->zero_grad();
		AdamState adam(0.001);
		adam.step({p});
		CHECK(p->value == std::vector<double>{1.0, 2.0, 3.0});
	}
	// single step from zero moments with g=1 moves by ~ -lr
	{
		auto p = make_tensor({1}, {0.5}, true, "w");
		p->ensure_grad();
		p->grad[0] = 1.0;
		AdamState adam(0.001);
		adam.step({p});
		// mhat = 1, vhat = 1 -> step = lr / (1 + eps)
		CHECK(p->value[0] == doctest::Approx(0.5 - 0.001).epsilon(1e-6));
	}
	// constant gradient: per-step move approaches lr * sign(g)
	{
		auto p = make_tensor({1}, {0.0}, true, "w");
		AdamState adam(0.01);
		double prev = 0.0;
		double last_step = 0.0;
		for (int i = 0; i < 200; ++i) {
			p->zero_grad();
			p->grad[0] = -3.7; // constant negative gradient
			adam.step({p});
			last_step = p->value[0] - prev;
			prev = p->value[0];
		}
		CHECK(last_step == doctest::Approx(0.01).epsilon(1e-3)); // lr * sign(+... -g)
	}
	// non-finite gradient reported with the parameter name
	{
		auto p = make_tensor({1}, {0.0}, true, "bad_param");
		p->ensure_grad();
		p->grad[0] = std::nan("");
		AdamState adam(0.001);
		CHECK_THROWS_WITH_AS(adam.step({p}), doctest::Contains("bad_param"), NumericsError);
	}
}

TEST_CASE("gradient clipping scales to the target norm") {
	auto p = make_tensor({2}, {0.0, 0.0}, true);
	p->ensure_grad();
	p->grad[0] = 30.0;
	p->grad[1] = 40.0; // norm 50
	const double norm = clip_global_norm({p}, 10.0);
	CHECK(norm == doctest::Approx(50.0));
	CHECK(p->grad[0] == doctest::Approx(6.0));
	CHECK(p->grad[1] == doctest::Approx(8.0));
}

TEST_CASE("forward results are bit-identical across runs") {
	std::mt19937_64 rng(77);
	auto a = random_param({8, 8}, rng);
	auto b = random_param({8, 8}, rng);
	auto run = [&] {
		Graph g;
		auto out = reduce_sum(g, tanh_op(g, matmul(g, a, b)));
		return out->value[0];
	};
	const double v1 = run();
	const double v2 = run();
	CHECK(std::memcmp(&v1, &v2, sizeof(double)) == 0);
}

TEST_CASE("linalg helpers agree with hand math") {
	// lu solve on a known system
	std::vector<double> a{2, 1, -1, -3, -1, 2, -2, 1, 2};
	std::vector<double> b{8, -11, -3};
	REQUIRE(linalg::lu_solve(a, 3, b));
	CHECK(b[0] == doctest::Approx(2.0));
	CHECK(b[1] == doctest::Approx(3.0));
	CHECK(b[2] == doctest::Approx(-1.0));

	// cholesky solve
	std::vector<double> s{4, 2, 2, 3};
	REQUIRE(linalg::cholesky(s, 2));
	std::vector<double> rhs{6, 5};
	linalg::cholesky_solve(s, 2, rhs);
	CHECK(4 * rhs[0] + 2 * rhs[1] == doctest::Approx(6.0));
	CHECK(2 * rhs[0] + 3 * rhs[1] == doctest::Approx(5.0));

	// least squares recovers an exact linear map
	std::vector<double> x{1, 0, 0, 1, 1, 1, 2, 1};
	std::vector<double> y{3, -1, 2, 5};
	const auto beta = linalg::least_squares(x, 4, 2, y);
	CHECK(beta[0] == doctest::Approx(3.0).epsilon(1e-6));
	CHECK(beta[1] == doctest::Approx(-1.0).epsilon(1e-6));
}
