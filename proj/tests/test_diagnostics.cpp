#include <doctest.h>

#include <sstream>

#include "sirinv/diagnostics.hpp"
#include "support.hpp"

using namespace sirinv;

TEST_CASE("volterra probe conventions") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 8, 8, 10);
  const auto rows = volterra_probe(ScalarField(g), {1, 2, 4, 8}, g.b);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.rho == 0.0);
  CHECK_THROWS_AS(volterra_probe(ScalarField(g, 1.0), {0.0}, g.b), std::invalid_argument);

  // Supported on the snapshot slice only: the integral is at most ht/2 * f.
  ScalarField spike(g);
  for (auto& v : spike.slice(g.snapshot_index())) v = 1.0;
  for (const auto& r : volterra_probe(spike, {1, 2, 4, 8}, g.b))
    CHECK(r.rho <= g.ht * g.ht * 2.0);
}

TEST_CASE("volterra trend test") {
  std::vector<VolterraRow> rows{{1, 0.5, 0.5}, {2, 0.1, 0.2}, {4, 0.05, 0.2}, {8, 0.026, 0.21}};
  CHECK(volterra_trend_ok(rows));
  rows[3].lambda_rho = 0.3;
  CHECK_FALSE(volterra_trend_ok(rows));
  CHECK(volterra_trend_ok(rows, 0.6));
}

TEST_CASE("random smooth fields are deterministic per seed") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 6, 6, 4);
  CHECK(random_smooth_field(g, 3).values == random_smooth_field(g, 3).values);
  CHECK(random_smooth_field(g, 3).values != random_smooth_field(g, 4).values);
}

TEST_CASE("lambda sweep records failures and continues") {
  const auto rows = lambda_sweep(
      [](double lambda) {
        if (lambda == 2.0) throw std::runtime_error("boom, at 2");
        SweepRow r;
        r.beta_error = lambda;
        return r;
      },
      {1.0, 2.0, 3.0});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].ok);
  CHECK_FALSE(rows[1].ok);
  CHECK(rows[1].error == "boom, at 2");
  CHECK(rows[2].beta_error == 3.0);

  const auto one = lambda_sweep([](double) { return SweepRow{}; }, {3.0});
  CHECK(one.size() == 1);

  std::ostringstream os;
  write_sweep_csv(os, rows);
  std::string line;
  std::istringstream is(os.str());
  int n = 0;
  while (std::getline(is, line)) ++n;
  CHECK(n == 4);
  CHECK(os.str().find("boom; at 2") != std::string::npos);
}

TEST_CASE("convexity probe on a pure quadratic never reports a violation") {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 5, 5, 4);
  const auto obs = testing::smooth_observations(g);
  const ConstraintSet cs(obs);
  const auto J = [](const WField& W) {
    double s = 0.0;
    for (double v : W.values) s += v * v;
    return s;
  };
  ConvexityOptions opt;
  opt.trials = 5;
  const auto report = convexity_probe(J, cs, initial_guess(obs, cs), opt);
  CHECK(report.violations == 0);
  CHECK(report.pass_fraction() == 1.0);
  CHECK(report.trials.size() == 5);

  const auto concave = convexity_probe([&](const WField& W) { return -J(W); }, cs, initial_guess(obs, cs), opt);
  CHECK(concave.violations == 5);
  CHECK(concave.pass_fraction() == 0.0);

  ConvexityOptions bad;
  bad.points = 2;
  CHECK_THROWS_AS(convexity_probe(J, cs, WField(g), bad), std::invalid_argument);
}
