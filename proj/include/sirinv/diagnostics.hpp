#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sirinv/optimizer.hpp"

namespace sirinv {

struct VolterraRow {
  double lambda = 0.0;
  double rho = 0.0;         // int (int_{T/2}^t f)^2 phi / int f^2 phi
  double lambda_rho = 0.0;
};

/// Sum of a few random separable cosine modes plus a constant; smooth on every grid.
ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int modes = 3);

/// Discrete ratio of the weighted Volterra estimate for each lambda. The
/// balanced weight is used; the ratio does not depend on the normalization.
std::vector<VolterraRow> volterra_probe(const ScalarField& f, const std::vector<double>& lambdas,
                                        double b);

/// True when lambda*rho(lambda) does not grow by more than `slack` (relative)
/// from one listed lambda to the next, considering lambdas >= lambda_min.
bool volterra_trend_ok(const std::vector<VolterraRow>& rows, double slack = 0.10,
                       double lambda_min = 2.0);

struct SweepRow {
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  double beta_error = 0.0;
  double gamma_error = 0.0;
  double J = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  std::string status;
};

/// Runs `run` for each lambda; a failing point is recorded and the sweep continues.
std::vector<SweepRow> lambda_sweep(const std::function<SweepRow(double)>& run,
                                   const std::vector<double>& lambdas);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

struct ConvexityOptions {
  int trials = 20;
  int points = 9;              // samples along each segment, >= 3
  double perturbation = 1e-2;  // std of the free-vector perturbation around the base
  double tolerance = -1e-10;   // second differences below this count as violations
  std::uint64_t seed = 1;
};

struct ConvexityTrial {
  double min_second_difference = 0.0;
  bool violated = false;
};

struct ConvexityReport {
  std::vector<ConvexityTrial> trials;
  int violations = 0;
  double min_second_difference = 0.0;
  double pass_fraction() const;
};

/// Samples J along segments between random admissible pairs near `base`.
ConvexityReport convexity_probe(const std::function<double(const WField&)>& J,
                                const ConstraintSet& constraints, const WField& base,
                                const ConvexityOptions& options);

void write_convexity_csv(std::ostream& os, const ConvexityReport& report);

}  // namespace sirinv
