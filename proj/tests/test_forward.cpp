#include <doctest.h>

#include <cmath>

#include "sirinv/errors.hpp"
#include "sirinv/forward.hpp"

using namespace sirinv;

namespace {

Grid small_grid() { return build_grid(0.1, 1.1, 0.5, 1.0, 12, 12, 8); }

}  // namespace

TEST_CASE("pure Neumann diffusion conserves mass") {
  const Grid g = small_grid();
  SirParams P = SirParams::zeros(g, 0.05);
  P.initial[0] = sample_spatial(g, [](double x, double y) { return 0.6 * std::exp(-10 * ((x - 0.6) * (x - 0.6) + y * y)); });
  P.initial[1] = sample_spatial(g, [](double x, double y) { return 1.0 + std::sin(5 * x) * std::cos(3 * y); });
  P.initial[2] = sample_spatial(g, [](double x, double) { return x; });
  ForwardReport report;
  const auto f = solve_forward(P, g, &report);
  for (int c = 0; c < 3; ++c) {
    const double m0 = spatial_mass(f[c], 0);
    for (int k = 1; k <= g.nt; ++k) CHECK(std::abs(spatial_mass(f[c], k) - m0) <= 1e-8 * std::abs(m0));
  }
  CHECK(report.max_relative_residual < 1e-10);
}

TEST_CASE("constant state is preserved exactly") {
  const Grid g = small_grid();
  SirParams P = SirParams::zeros(g, 0.05);
  for (int c = 0; c < 3; ++c) P.initial[c] = SpatialField(g, 1.0);
  const auto f = solve_forward(P, g);
  for (int c = 0; c < 3; ++c)
    for (double v : f[c].values) CHECK(v == 1.0);
}

TEST_CASE("zero data gives zero fields") {
  const Grid g = small_grid();
  SirParams P = SirParams::zeros(g, 5e-5);
  for (int c = 0; c < 3; ++c) P.q[c] = constant_velocity(g, 0.2, 0.2);
  P.beta = SpatialField(g, 0.6);
  P.gamma = SpatialField(g, 0.4);
  const auto f = solve_forward(P, g);
  for (int c = 0; c < 3; ++c)
    for (double v : f[c].values) CHECK(v == 0.0);
}

TEST_CASE("infection moves mass from S to R without loss") {
  // Spatially constant data: S decays, I and R grow at every node.
  const Grid g = small_grid();
  SirParams P = SirParams::zeros(g, 1e-4);
  P.initial[0] = SpatialField(g, 0.8);
  P.initial[1] = SpatialField(g, 0.2);
  P.beta = SpatialField(g, 0.5);
  P.gamma = SpatialField(g, 0.3);
  const auto f = solve_forward(P, g);
  for (int k = 1; k <= g.nt; ++k) {
    CHECK(f[0](k, 3, 3) < f[0](k - 1, 3, 3));
    CHECK(f[1](k, 3, 3) > f[1](k - 1, 3, 3));
    CHECK(f[2](k, 3, 3) > f[2](k - 1, 3, 3));
  }
  CHECK(f[2](0, 5, 5) == 0.0);
}

TEST_CASE("sampling restricts by nodal stride") {
  const Grid fine = build_grid(0.1, 1.1, 0.5, 1.0, 16, 16, 16);
  const Grid coarse = build_grid(0.1, 1.1, 0.5, 1.0, 4, 4, 4);
  SirFields fields{sample(fine, [](double x, double y, double t) { return x + 2 * y + 3 * t; }),
                   sample(fine, [](double x, double y, double t) { return x * y * t; }),
                   ScalarField(fine, 2.0)};
  std::array<BoundaryTrace, 3> flux{BoundaryTrace(fine, 0.5), BoundaryTrace(fine), BoundaryTrace(fine)};
  const auto raw = sample_observations(fields, flux, coarse);
  for (int j = 0; j <= coarse.ny; ++j)
    for (int i = 0; i <= coarse.nx; ++i) {
      CHECK(raw.p[0](j, i) == fields.rho_S(8, 4 * j, 4 * i));
      CHECK(raw.p[1](j, i) == fields.rho_I(8, 4 * j, 4 * i));
      CHECK(raw.p[2](j, i) == 2.0);
    }
  for (int k = 0; k <= coarse.nt; ++k)
    for (int j = 0; j <= coarse.ny; ++j) {
      const auto n = BoundaryTrace::side_index(coarse, k, j, true);
      CHECK(raw.f[0][n] == fields.rho_S(4 * k, 4 * j, 16));
      CHECK(raw.f[2][n] == 2.0);
      CHECK(raw.g[0].left[n] == 0.5);
    }
  CHECK(raw.g[1].all_zero());
  CHECK(raw.g[2].all_zero());
  CHECK_THROWS_AS(sample_observations(fields, flux, build_grid(0.1, 1.1, 0.5, 1.0, 6, 4, 4)),
                  std::invalid_argument);
}

TEST_CASE("restriction of an 80x80x320 field to 20x20x10 is bit-identical") {
  const Grid fine = build_grid(0.1, 1.1, 0.5, 1.0, 80, 80, 320);
  const Grid coarse = build_grid(0.1, 1.1, 0.5, 1.0, 20, 20, 10);
  const auto f = sample(fine, [](double x, double y, double t) { return std::sin(7 * x + 3 * y + t); });
  const auto r = restrict_field(f, coarse);
  for (int k = 0; k <= coarse.nt; ++k)
    for (int j = 0; j <= coarse.ny; ++j)
      for (int i = 0; i <= coarse.nx; ++i) CHECK(r(k, j, i) == f(32 * k, 4 * j, 4 * i));
}
