#include <doctest.h>

#include <cmath>
#include <random>

#include "sirinv/convexification.hpp"
#include "support.hpp"

using namespace sirinv;

namespace {

/// Constant snapshots, zero traces and zero velocities.
ObservationSet flat_observations(const Grid& g, double p) {
  RawObservations raw;
  raw.grid = g;
  for (int c = 0; c < 3; ++c) {
    raw.p[c] = SpatialField(g, p);
    raw.f[c].assign(g.nodes_t() * g.nodes_y(), 0.0);
    raw.g[c] = BoundaryTrace(g);
  }
  const auto q0 = constant_velocity(g, 0.0, 0.0);
  return build_cauchy_vectors(raw, 0.05, {q0, q0, q0}, 0.0, 1e-3);
}

}  // namespace

TEST_CASE("Carleman weight values") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 10, 10, 4);
  CarlemanParams p;
  p.lambda = 0.0;
  for (double v : cwf_eval(p, g).phi.values) CHECK(v == 1.0);

  p.lambda = 3.0;
  const auto w = cwf_eval(p, g);
  CHECK(w.balanced(2, 0, g.nx) == doctest::Approx(1.0).epsilon(1e-14));
  for (double v : w.balanced.values) CHECK(v <= 1.0 + 1e-14);
  // x = 0.6, t = 0.75
  CHECK(w.phi(3, 0, 5) == doctest::Approx(std::exp(1.785)).epsilon(1e-12));
  CHECK(w.balanced(3, 0, 5) == doctest::Approx(std::exp(1.785 - 7.26)).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 10, 10, 4);
  CarlemanParams p;
  CHECK_NOTHROW(validate(p, g));
  p.lambda = -1.0;
  CHECK_THROWS_AS(validate(p, g), std::invalid_argument);
  p.lambda = 300.0;
  CHECK_THROWS_AS(validate(p, g), std::invalid_argument);
  p.lambda = 3.0;
  p.xi = -0.1;
  CHECK_THROWS_AS(validate(p, g), std::invalid_argument);
  p.xi = 0.01;
  p.theory_mode = true;
  CHECK_THROWS_AS(validate(p, g), std::invalid_argument);
  p.xi = 2.0 * std::exp(-3.0 / 4.0);
  CHECK(xi_in_theory_window(p, 1.0));
  CHECK_NOTHROW(validate(p, g));
  CHECK(parse_regularization_norm("differences") == RegularizationNorm::Differences);
  CHECK(parse_regularization_norm("derivatives") == RegularizationNorm::Derivatives);
  CHECK_THROWS(parse_regularization_norm("h2"));
}

TEST_CASE("W = 0 on flat data gives P = 0 and J = 0") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 4);
  const auto obs = flat_observations(g, 0.7);
  const WField W(g);
  for (const auto& P : assemble_P(W, obs))
    for (double v : P.values) CHECK(v == 0.0);
  CarlemanParams p;
  p.xi = 1.0;
  CHECK(functional_J(W, p, obs) == 0.0);
}

TEST_CASE("J is affine in xi with slope ||W||^2") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 4);
  const auto obs = testing::smooth_observations(g);
  const auto W = testing::random_w(g, 11, 0.5);
  CarlemanParams p1, p2;
  p1.xi = 0.01;
  p2.xi = 0.3;
  const Functional J1(obs, p1), J2(obs, p2);
  const double diff = J2.evaluate(W).total - J1.evaluate(W).total;
  CHECK(diff == doctest::Approx((p2.xi - p1.xi) * J1.squared_norm(W)).epsilon(1e-10));
  CHECK(J1.evaluate(W).fidelity == doctest::Approx(J2.evaluate(W).fidelity).epsilon(1e-14));
}

TEST_CASE("gradient matches central differences") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 5, 5, 4);
  const auto obs = testing::smooth_observations(g);
  for (auto norm : {RegularizationNorm::Differences, RegularizationNorm::Derivatives}) {
    CarlemanParams p;
    p.norm = norm;
    const Functional J(obs, p);
    const auto W = testing::random_w(g, 5, 0.3);
    std::vector<double> grad(W.values.size());
    J.evaluate(W, grad);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    for (int d = 0; d < 3; ++d) {
      WField dir(g);
      for (auto& v : dir.values) v = n01(rng);
      double analytic = 0.0;
      for (std::size_t n = 0; n < grad.size(); ++n) analytic += grad[n] * dir.values[n];
      const double eps = 1e-5;
      WField Wp = W, Wm = W;
      for (std::size_t n = 0; n < W.values.size(); ++n) {
        Wp.values[n] += eps * dir.values[n];
        Wm.values[n] -= eps * dir.values[n];
      }
      const double fd = (J.evaluate(Wp).total - J.evaluate(Wm).total) / (2 * eps);
      CHECK(std::abs(fd - analytic) <= 1e-6 * std::abs(analytic));
    }
    const auto G = gradient_J(W, p, obs);
    CHECK(testing::max_abs_diff(G.values, grad) == 0.0);
  }
}

TEST_CASE("W from populations uses time differences") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 4, 4, 10);
  const auto S = sample(g, [](double x, double, double t) { return x * t * t; });
  const auto I = sample(g, [](double, double, double t) { return t; });
  const auto R = ScalarField(g, 0.4);
  const auto W = w_from_populations(S, I, R);
  CHECK(W(0, 4, 2, 3) == doctest::Approx(2 * g.x(3) * g.t(4)));
  CHECK(W(3, 4, 2, 3) == doctest::Approx(2 * g.x(3)));
  CHECK(W(1, 7, 1, 1) == doctest::Approx(1.0));
  CHECK(std::abs(W(4, 7, 1, 1)) < 1e-10);
  CHECK(W(2, 5, 0, 0) == 0.0);
  CHECK(W(5, 5, 0, 0) == 0.0);
}
