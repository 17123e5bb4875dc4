#include <doctest.h>

#include <cmath>

#include "sirinv/errors.hpp"
#include "sirinv/observation.hpp"
#include "sirinv/spline.hpp"
#include "support.hpp"

using namespace sirinv;

TEST_CASE("natural spline reproduces linear data") {
  std::vector<double> s;
  for (int k = 0; k <= 10; ++k) s.push_back(0.3 + 2.0 * k * 0.1);
  const auto d = spline_derivatives_uniform(s, 0.1);
  for (double v : d.first) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  for (double v : d.second) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("spline derivative of sin t at ht = 0.1") {
  std::vector<double> s;
  for (int k = 0; k <= 10; ++k) s.push_back(std::sin(0.1 * k));
  const auto d = spline_time_derivatives(s, 0.1);
  std::vector<double> err;
  for (int k = 0; k <= 10; ++k) err.push_back(std::abs(d.first[k] - std::cos(0.1 * k)));
  // sin'' vanishes at t = 0, so the natural end is accurate there; at t = 1 the
  // s'' = 0 condition is wrong by sin(1) and the error decays away from that end.
  for (int k = 0; k <= 7; ++k) CHECK(err[k] < 1e-3);
  CHECK(err[9] < 1e-2);
  for (int k = 5; k < 10; ++k) CHECK(err[k] < err[k + 1]);
}

TEST_CASE("natural end conditions bias the ends for t^3") {
  std::vector<double> s;
  for (int k = 0; k <= 20; ++k) s.push_back(std::pow(0.05 * k, 3));
  const auto d = spline_time_derivatives(s, 0.05);
  const double end_err = std::abs(d.second[20] - 6.0);
  const double mid_err = std::abs(d.second[10] - 6.0 * 0.5);
  CHECK(mid_err < end_err);
}

TEST_CASE("cubic spline interpolates and validates input") {
  const std::vector<double> x{0.0, 0.5, 1.5, 2.0}, y{1.0, 2.0, 0.0, 1.0};
  const CubicSpline s(x, y);
  for (std::size_t n = 0; n < x.size(); ++n) CHECK(s.value(x[n]) == doctest::Approx(y[n]));
  CHECK(s.knot_second_derivative(0) == 0.0);
  CHECK(s.knot_second_derivative(3) == 0.0);
  const std::vector<double> bad{0.0, 0.0, 1.0, 2.0};
  CHECK_THROWS_AS(CubicSpline(bad, y), std::invalid_argument);
  const CubicSpline clamped(x, y, SplineEnds{0.25, -1.0});
  CHECK(clamped.derivative(0.0) == doctest::Approx(0.25));
  CHECK(clamped.derivative(2.0) == doctest::Approx(-1.0));
}

TEST_CASE("spline Laplacian of a quadratic with clamped ends") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 10, 10, 2);
  const auto p = sample_spatial(g, [](double x, double y) { return x * x + y * y; });
  BoundarySlopes slopes;
  slopes.left.assign(g.nodes_y(), -2.0 * g.a);
  slopes.right.assign(g.nodes_y(), 2.0 * g.b);
  slopes.bottom.assign(g.nodes_x(), 2.0 * g.A);
  slopes.top.assign(g.nodes_x(), 2.0 * g.A);
  const auto lap = spline_spatial_laplacian(p, &slopes);
  for (double v : lap.values) CHECK(v == doctest::Approx(4.0).epsilon(1e-10));

  // Natural ends bias the boundary but interior nodes away from the ends stay close.
  const auto nat = spline_spatial_laplacian(p);
  CHECK(std::abs(nat(5, 5) - 4.0) < std::abs(nat(5, 0) - 4.0));

  for (double v : spline_spatial_laplacian(SpatialField(g, 3.0)).values) CHECK(v == 0.0);
}

TEST_CASE("noise: sigma 0 is the identity, bounds hold, draws are deterministic") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 4);
  RawObservations raw = testing::smooth_raw(g);
  const auto same = add_noise(raw, {0.0, 7});
  for (int c = 0; c < 3; ++c) {
    CHECK(same.p[c].values == raw.p[c].values);
    CHECK(same.f[c] == raw.f[c]);
  }

  for (int c = 0; c < 3; ++c) {
    raw.p[c] = SpatialField(g, 1.0);
    std::fill(raw.f[c].begin(), raw.f[c].end(), 1.0);
  }
  const auto noisy = add_noise(raw, {0.05, 3});
  bool moved = false;
  for (int c = 0; c < 3; ++c) {
    for (double v : noisy.p[c].values) {
      CHECK(v >= 0.95);
      CHECK(v <= 1.05);
      moved = moved || v != 1.0;
    }
    for (double v : noisy.f[c]) {
      CHECK(v >= 0.95);
      CHECK(v <= 1.05);
    }
    CHECK(noisy.g[c].left == raw.g[c].left);
  }
  CHECK(moved);

  const auto r1 = add_noise(raw, {0.03, 42});
  const auto r2 = add_noise(raw, {0.03, 42});
  for (int c = 0; c < 3; ++c) {
    CHECK(r1.p[c].values == r2.p[c].values);
    CHECK(r1.f[c] == r2.f[c]);
  }
}

TEST_CASE("r coefficients on constant snapshots") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 2);
  const auto q0 = constant_velocity(g, 0.0, 0.0);
  const auto r = build_r_coefficients(SpatialField(g, 1.0), SpatialField(g, 1.0), SpatialField(g, 0.0),
                                      q0, q0, 0.05, 1e-3);
  for (std::size_t n = 0; n < g.spatial_size(); ++n) {
    CHECK(r.r[0].values[n] == -1.0);
    CHECK(r.r[1].values[n] == 0.0);
    CHECK(r.r[2].values[n] == 1.0);
    CHECK(r.r[3].values[n] == 0.0);
  }
  CHECK(r.kappa == 1.0);

  const auto r2 = build_r_coefficients(SpatialField(g, 2.0), SpatialField(g, 0.5), SpatialField(g, 1.0),
                                       q0, q0, 0.05, 1e-3);
  CHECK(r2.r[0](3, 3) == doctest::Approx(-1.0));
  CHECK(r2.r[2](3, 3) == doctest::Approx(2.0));
  CHECK(r2.kappa == 0.5);

  SpatialField small(g, 1.0);
  small(2, 3) = 1e-5;
  CHECK_THROWS_AS(build_r_coefficients(small, SpatialField(g, 1.0), SpatialField(g, 0.0), q0, q0, 0.05, 1e-3),
                  NumericalError);
}

TEST_CASE("Cauchy vectors: zero flux gives zero G, linear traces give constant F") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 10);
  RawObservations raw;
  raw.grid = g;
  for (int c = 0; c < 3; ++c) {
    raw.p[c] = SpatialField(g, 1.0 + 0.1 * c);
    raw.g[c] = BoundaryTrace(g);
    raw.f[c].assign(g.nodes_t() * g.nodes_y(), 0.0);
    for (int k = 0; k <= g.nt; ++k)
      for (int j = 0; j <= g.ny; ++j)
        raw.f[c][BoundaryTrace::side_index(g, k, j, true)] = 1.0 + (c + 1) * g.t(k) + g.y(j);
  }
  const auto obs = build_cauchy_vectors(raw, 0.05, testing::velocities(g), 0.0, 1e-3);
  for (int comp = 0; comp < 6; ++comp) {
    const auto& G = obs.G(comp);
    CHECK(G.all_zero());
    for (int k = 0; k <= g.nt; ++k)
      for (int j = 0; j <= g.ny; ++j) {
        if (comp < 3)
          CHECK(obs.F(comp, k, j) == doctest::Approx(comp + 1.0).epsilon(1e-10));
        else
          CHECK(std::abs(obs.F(comp, k, j)) < 1e-9);
      }
  }
  CHECK(obs.kappa == doctest::Approx(1.0));
}
