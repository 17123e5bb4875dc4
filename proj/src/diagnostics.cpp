#include "sirinv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>

namespace sirinv {

ScalarField random_smooth_field(const Grid& g, std::uint64_t seed, int modes) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.0, 3.0), phase(0.0, 2.0 * M_PI);
  struct Mode {
    double a, fx, fy, ft, px, py, pt;
  };
  std::vector<Mode> ms;
  for (int m = 0; m < modes; ++m)
    ms.push_back({amp(rng), freq(rng), freq(rng), freq(rng), phase(rng), phase(rng), phase(rng)});
  const double offset = amp(rng);
  const double Lx = g.b - g.a, Ly = 2.0 * g.A, Lt = g.T;
  return sample(g, [&](double x, double y, double t) {
    double v = offset;
    for (const auto& m : ms)
      v += m.a * std::cos(M_PI * m.fx * (x - g.a) / Lx + m.px) * std::cos(M_PI * m.fy * (y + g.A) / Ly + m.py) *
           std::cos(M_PI * m.ft * t / Lt + m.pt);
    return v;
  });
}

std::vector<VolterraRow> volterra_probe(const ScalarField& f, const std::vector<double>& lambdas,
                                        double b) {
  const Grid& g = f.grid;
  const auto w = quadrature_weights(g);
  std::vector<double> If(g.size());
  volterra_apply(g, f.values, If);
  std::vector<VolterraRow> rows;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw std::invalid_argument("volterra_probe: lambda must be > 0");
    CarlemanParams params;
    params.lambda = lambda;
    params.b = b;
    params.xi = 0.0;
    const auto cwf = cwf_eval(params, g);
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
      num += w[n] * If[n] * If[n] * cwf.balanced.values[n];
      den += w[n] * f.values[n] * f.values[n] * cwf.balanced.values[n];
    }
    const double rho = den < 1e-300 ? 0.0 : num / den;
    rows.push_back({lambda, rho, lambda * rho});
  }
  return rows;
}

bool volterra_trend_ok(const std::vector<VolterraRow>& rows, double slack, double lambda_min) {
  const VolterraRow* prev = nullptr;
  for (const auto& r : rows) {
    if (r.lambda < lambda_min) continue;
    if (prev && r.lambda_rho > prev->lambda_rho * (1.0 + slack)) return false;
    prev = &r;
  }
  return true;
}

std::vector<SweepRow> lambda_sweep(const std::function<SweepRow(double)>& run,
                                   const std::vector<double>& lambdas) {
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    try {
      SweepRow r = run(lambda);
      r.lambda = lambda;
      r.ok = true;
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      SweepRow r;
      r.lambda = lambda;
      r.error = e.what();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "lambda,ok,beta_error,gamma_error,J,grad_norm,iterations,status,error\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    os << r.lambda << ',' << (r.ok ? 1 : 0) << ',' << r.beta_error << ',' << r.gamma_error << ','
       << r.J << ',' << r.grad_norm << ',' << r.iterations << ',' << r.status << ',' << err << '\n';
  }
}

double ConvexityReport::pass_fraction() const {
  if (trials.empty()) return 1.0;
  return 1.0 - static_cast<double>(violations) / static_cast<double>(trials.size());
}

ConvexityReport convexity_probe(const std::function<double(const WField&)>& J,
                                const ConstraintSet& constraints, const WField& base,
                                const ConvexityOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("convexity_probe: trials must be >= 1");
  if (options.points < 3) throw std::invalid_argument("convexity_probe: need at least 3 points");
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, options.perturbation);
  const auto z0 = constraints.eliminate(base);
  ConvexityReport report;
  report.min_second_difference = INFINITY;
  std::vector<double> z1(z0.size()), z2(z0.size()), z(z0.size()), values;
  for (int t = 0; t < options.trials; ++t) {
    for (std::size_t n = 0; n < z0.size(); ++n) z1[n] = z0[n] + normal(rng);
    for (std::size_t n = 0; n < z0.size(); ++n) z2[n] = z0[n] + normal(rng);
    values.assign(static_cast<std::size_t>(options.points), 0.0);
    for (int p = 0; p < options.points; ++p) {
      const double s = static_cast<double>(p) / (options.points - 1);
      for (std::size_t n = 0; n < z.size(); ++n) z[n] = (1.0 - s) * z1[n] + s * z2[n];
      values[static_cast<std::size_t>(p)] = J(constraints.expand(z));
    }
    ConvexityTrial trial{INFINITY, false};
    for (std::size_t p = 1; p + 1 < values.size(); ++p)
      trial.min_second_difference =
          std::min(trial.min_second_difference, values[p - 1] - 2.0 * values[p] + values[p + 1]);
    trial.violated = trial.min_second_difference < options.tolerance;
    if (trial.violated) ++report.violations;
    report.min_second_difference = std::min(report.min_second_difference, trial.min_second_difference);
    report.trials.push_back(trial);
  }
  return report;
}

void write_convexity_csv(std::ostream& os, const ConvexityReport& report) {
  os << "trial,min_second_difference,violated\n";
  os << std::setprecision(17);
  for (std::size_t t = 0; t < report.trials.size(); ++t)
    os << t << ',' << report.trials[t].min_second_difference << ','
       << (report.trials[t].violated ? 1 : 0) << '\n';
}

}  // namespace sirinv
