#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sirinv/optimizer.hpp"
#include "support.hpp"

using namespace sirinv;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("constraint elimination round-trips admissible fields") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 7, 4);
  const auto obs = testing::smooth_observations(g);
  const ConstraintSet cs(obs);
  const auto z = random_vector(cs.free_size(), 3);
  const WField W = cs.expand(z);
  CHECK(cs.residual(W) < 1e-12);
  CHECK(testing::max_abs_diff(cs.eliminate(W), z) < 1e-12);
  const WField W2 = cs.expand(cs.eliminate(W));
  CHECK(testing::max_abs_diff(W.values, W2.values) < 1e-12);
  CHECK(cs.residual(testing::random_w(g, 1)) > 1e-3);
}

TEST_CASE("zero data: expand(0) is zero and the initial guess vanishes") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 4);
  RawObservations raw;
  raw.grid = g;
  for (int c = 0; c < 3; ++c) {
    raw.p[c] = SpatialField(g, 1.0);
    raw.f[c].assign(g.nodes_t() * g.nodes_y(), 0.0);
    raw.g[c] = BoundaryTrace(g);
  }
  const auto obs = build_cauchy_vectors(raw, 0.05, testing::velocities(g), 0.0, 1e-3);
  const ConstraintSet cs(obs);
  for (double v : cs.expand(std::vector<double>(cs.free_size(), 0.0)).values) CHECK(v == 0.0);
  for (double v : initial_guess(obs, cs).values) CHECK(v == 0.0);
}

TEST_CASE("initial guess matches F at x = b and is admissible") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 4);
  const auto obs = testing::smooth_observations(g);
  const ConstraintSet cs(obs);
  const WField W0 = initial_guess(obs, cs);
  CHECK(cs.residual(W0) < 1e-12);
  for (int c = 0; c < kWComponents; ++c)
    for (int k = 0; k <= g.nt; ++k)
      for (int j = 0; j <= g.ny; ++j) CHECK(W0(c, k, j, g.nx) == obs.F(c, k, j));
}

TEST_CASE("expand_transpose is the adjoint of expand's linear part") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 5, 6, 4);
  const auto obs = testing::smooth_observations(g);
  const ConstraintSet cs(obs);
  const auto z = random_vector(cs.free_size(), 4);
  const auto dz = random_vector(cs.free_size(), 5);
  const WField y = testing::random_w(g, 6);
  std::vector<double> zp(z);
  for (std::size_t n = 0; n < z.size(); ++n) zp[n] += dz[n];
  const WField W0 = cs.expand(z), W1 = cs.expand(zp);
  double lhs = 0.0;
  for (std::size_t n = 0; n < y.values.size(); ++n) lhs += y.values[n] * (W1.values[n] - W0.values[n]);
  const auto adj = cs.expand_transpose(y);
  double rhs = 0.0;
  for (std::size_t n = 0; n < dz.size(); ++n) rhs += adj[n] * dz[n];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("quadratic oracle") {
  constexpr std::size_t n = 60;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // A = B^T B + I, minimizer of 0.5 x^T A x - b^T x is A^{-1} b; choose x* and set b = A x*.
  std::vector<double> B(n * n), A(n * n, 0.0);
  for (auto& v : B) v = u(rng) / std::sqrt(double(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = i == j ? 1.0 : 0.0;
      for (std::size_t k = 0; k < n; ++k) s += B[k * n + i] * B[k * n + j];
      A[i * n + j] = s;
    }
  const auto xstar = random_vector(n, 13);
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b[i] += A[i * n + j] * xstar[j];

  const Objective f = [&](std::span<const double> x, std::span<double> g) {
    double val = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double Ax = 0.0;
      for (std::size_t j = 0; j < n; ++j) Ax += A[i * n + j] * x[j];
      g[i] = Ax - b[i];
      val += 0.5 * x[i] * Ax - b[i] * x[i];
    }
    return EvalResult{val, val, 0.0};
  };
  for (auto mode : {OptimizerMode::LBFGS, OptimizerMode::GradientDescent}) {
    OptimizerConfig cfg;
    cfg.mode = mode;
    cfg.grad_tol = 1e-9;  // smallest eigenvalue >= 1, so |x - x*| <= |grad|
    cfg.max_iters = 500;
    const auto res = minimize(f, std::vector<double>(n, 0.0), cfg);
    INFO("mode ", to_string(mode), " iterations ", res.iterations, " grad ", res.grad_norm);
    CHECK(res.status == OptimizerStatus::Converged);
    CHECK(res.iterations <= 500);
    CHECK(testing::max_abs_diff(res.z, xstar) < 1e-8);
    for (std::size_t t = 1; t < res.trace.size(); ++t) CHECK(res.trace[t].J <= res.trace[t - 1].J);
  }
}

TEST_CASE("minimize rejects a non-finite start and bad configs") {
  const Objective f = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return EvalResult{NAN, NAN, 0.0};
  };
  CHECK_THROWS(minimize(f, {1.0}, OptimizerConfig{}));
  OptimizerConfig bad;
  bad.backtrack = 1.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  CHECK(parse_optimizer_mode("lbfgs") == OptimizerMode::LBFGS);
  CHECK(parse_optimizer_mode("gradient") == OptimizerMode::GradientDescent);
  CHECK_THROWS(parse_optimizer_mode("newton"));
}

TEST_CASE("functional minimization keeps every iterate admissible") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 4);
  const auto obs = testing::smooth_observations(g);
  CarlemanParams p;
  p.lambda = 1.0;
  p.xi = 0.01;
  const Functional J(obs, p);
  const ConstraintSet cs(obs);
  OptimizerConfig cfg;
  cfg.gradient_scale = volume_gradient_scale(g);
  cfg.max_iters = 2000;
  const auto run = minimize_functional(J, cs, initial_guess(obs, cs), cfg);
  CHECK(run.result.status == OptimizerStatus::Converged);
  CHECK(run.result.grad_norm < cfg.grad_tol);
  for (const auto& row : run.result.trace) CHECK(row.constraint_residual <= 1e-12);
  CHECK(cs.residual(run.W) <= 1e-12);
  CHECK(run.result.trace.back().J <= run.result.trace.front().J);

  std::ostringstream os;
  write_trace_csv(os, run.result.trace);
  CHECK(os.str().rfind("iter,", 0) == 0);
}
