// Command-line driver: forward -> make-data -> invert -> evaluate, plus sweeps,
// probes and field export.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sirinv/diagnostics.hpp"
#include "sirinv/errors.hpp"
#include "sirinv/fieldio.hpp"
#include "sirinv/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sirinv;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;

  RunConfig load() const { return load_config(config, overrides); }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "run configuration (TOML)")->required();
  cmd->add_option("-s,--set", c.overrides, "override a config key, e.g. inversion.lambda=0");
}

void log(const std::string& msg) { std::cerr << "sirinv: " << msg << '\n'; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::optional<Metrics> metrics_if_truth(const RunConfig& cfg, const Reconstruction& rec) {
  if (!fs::exists(fs::path(cfg.output.forward) / "rho.fld")) return std::nullopt;
  const ForwardArchive fwd = read_forward_archive(cfg.output.forward, cfg);
  return error_metrics(rec, restrict_truth(fwd.truth, fwd.fields, cfg.coarse_grid()), cfg.metrics);
}

int cmd_forward(const Common& c) {
  const RunConfig cfg = c.load();
  log("forward solve on " + std::to_string(cfg.forward.nx) + "x" + std::to_string(cfg.forward.ny) +
      "x" + std::to_string(cfg.forward.nt));
  const ForwardOutput out = run_forward(cfg);
  for (const auto& w : out.report.warnings) log("warning: " + w);
  write_forward_archive(cfg.output.forward, out, cfg);
  log("snapshot kappa = " + fmt(out.snapshot_kappa) + ", wrote " + cfg.output.forward);
  return 0;
}

int cmd_make_data(const Common& c) {
  const RunConfig cfg = c.load();
  const ForwardArchive fwd = read_forward_archive(cfg.output.forward, cfg);
  const RawObservations raw = make_raw_data(fwd.fields, fwd.flux, cfg);
  const ObservationSet obs = make_observation_set(raw, cfg);
  write_data_archive(cfg.output.data, raw, obs, cfg);
  log("sigma = " + fmt(cfg.observation.sigma) + ", kappa = " + fmt(obs.kappa) + ", wrote " +
      cfg.output.data);
  return 0;
}

ObservationSet load_observations(const RunConfig& cfg) {
  return make_observation_set(read_data_archive(cfg.output.data, cfg), cfg);
}

int cmd_invert(const Common& c) {
  const RunConfig cfg = c.load();
  const ObservationSet obs = load_observations(cfg);
  const InversionOutput out = run_inversion(obs, cfg);
  const auto metrics = metrics_if_truth(cfg, out.reconstruction);
  write_inversion_archive(cfg.output.inversion, out, obs, cfg, metrics);
  const auto& r = out.run.result;
  log("lambda = " + fmt(cfg.inversion.carleman.lambda) + ": " + to_string(r.status) + " after " +
      std::to_string(r.iterations) + " iterations, |grad J| = " + fmt(r.grad_norm));
  if (metrics)
    log("beta error " + fmt(metrics->beta_rel_l2) + ", gamma error " + fmt(metrics->gamma_rel_l2));
  log("wrote " + cfg.output.inversion);
  return r.status == OptimizerStatus::Converged ? 0 : 3;
}

int cmd_evaluate(const Common& c) {
  const RunConfig cfg = c.load();
  const Reconstruction rec = read_reconstruction(cfg.output.inversion, cfg);
  const auto metrics = metrics_if_truth(cfg, rec);
  if (!metrics) throw ConfigError("no forward archive at '" + cfg.output.forward + "'");
  std::ofstream(fs::path(cfg.output.inversion) / "metrics.json") << metrics_json(*metrics) << '\n';
  std::ofstream os(fs::path(cfg.output.inversion) / "metrics.csv");
  write_metrics_csv(os, *metrics);
  std::cout << metrics_json(*metrics) << '\n';
  return 0;
}

int cmd_sweep(const Common& c, const std::vector<double>& lambdas, std::string out_path) {
  const RunConfig cfg = c.load();
  const ObservationSet obs = load_observations(cfg);
  const ForwardArchive fwd = read_forward_archive(cfg.output.forward, cfg);
  const GroundTruth truth = restrict_truth(fwd.truth, fwd.fields, cfg.coarse_grid());
  const auto rows = lambda_sweep(
      [&](double lambda) {
        RunConfig run = cfg;
        run.inversion.carleman.lambda = lambda;
        const InversionOutput out = run_inversion(obs, run);
        const Metrics m = error_metrics(out.reconstruction, truth, cfg.metrics);
        SweepRow row;
        row.beta_error = m.beta_rel_l2;
        row.gamma_error = m.gamma_rel_l2;
        row.J = out.run.result.trace.empty() ? 0.0 : out.run.result.trace.back().J;
        row.grad_norm = out.run.result.grad_norm;
        row.iterations = out.run.result.iterations;
        row.status = to_string(out.run.result.status);
        log("lambda = " + fmt(lambda) + ": beta error " + fmt(m.beta_rel_l2) + " (" + row.status + ")");
        return row;
      },
      lambdas);
  if (out_path.empty()) out_path = (fs::path(cfg.output.dir) / "sweep_lambda.csv").string();
  fs::create_directories(fs::path(out_path).parent_path().empty() ? fs::path(".")
                                                                   : fs::path(out_path).parent_path());
  std::ofstream os(out_path);
  write_sweep_csv(os, rows);
  write_sweep_csv(std::cout, rows);
  return 0;
}

struct VolterraArgs {
  int fields = 10;
  std::uint64_t seed = 1;
  std::vector<double> lambdas{2.0, 4.0, 8.0};
};

int cmd_probe_volterra(const Common& c, const VolterraArgs& a) {
  const RunConfig cfg = c.load();
  const Grid g = cfg.coarse_grid();
  std::cout << "field,lambda,rho,lambda_rho\n" << std::setprecision(17);
  int failures = 0;
  for (int n = 0; n < a.fields; ++n) {
    const auto rows = volterra_probe(random_smooth_field(g, a.seed + static_cast<std::uint64_t>(n)),
                                     a.lambdas, g.b);
    for (const auto& r : rows) std::cout << n << ',' << r.lambda << ',' << r.rho << ',' << r.lambda_rho << '\n';
    if (!volterra_trend_ok(rows)) ++failures;
  }
  log(std::to_string(a.fields - failures) + "/" + std::to_string(a.fields) +
      " fields with non-increasing lambda*rho (10% slack)");
  return 0;
}

struct ConvexityArgs {
  ConvexityOptions options;
  bool theory = false;
};

int cmd_probe_convexity(const Common& c, const ConvexityArgs& a) {
  const RunConfig cfg = c.load();
  const ObservationSet obs = load_observations(cfg);
  CarlemanParams params = cfg.inversion.carleman;
  params.b = obs.grid.b;
  if (a.theory) {
    params.xi = 2.0 * std::exp(-params.lambda * obs.grid.T * obs.grid.T / 4.0);
    params.theory_mode = true;
  }
  const Functional J(obs, params);
  const ConstraintSet cs(obs);
  const auto report = convexity_probe([&](const WField& W) { return J.evaluate(W).total; }, cs,
                                      initial_guess(obs, cs), a.options);
  write_convexity_csv(std::cout, report);
  log(std::to_string(report.violations) + " of " + std::to_string(report.trials.size()) +
      " segments with a second difference below " + fmt(a.options.tolerance));
  return 0;
}

struct ExportArgs {
  std::string input, output, format = "csv";
  std::optional<double> t;
  std::optional<std::uint32_t> k;
};

int cmd_export(const ExportArgs& a) {
  FieldFile f;
  if (fs::path(a.input).extension() == ".csv") {
    std::ifstream is(a.input);
    if (!is) throw ConfigError("cannot open '" + a.input + "'");
    f = read_csv(is);
  } else {
    f = load_field(a.input);
  }
  if (a.k) f = time_slice(f, *a.k);
  else if (a.t) f = time_slice(f, nearest_time_index(f, *a.t));

  if (a.format == "fld") {
    if (a.output.empty()) throw ConfigError("export --format fld needs --output");
    save_field(a.output, f);
    return 0;
  }
  std::ofstream file;
  if (!a.output.empty()) {
    file.open(a.output);
    if (!file) throw ConfigError("cannot write '" + a.output + "'");
  }
  std::ostream& os = a.output.empty() ? std::cout : file;
  if (a.format == "csv") write_csv(os, f);
  else write_vtk(os, f, fs::path(a.input).filename().string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convexification inversion for the spatial SIR model"};
  app.require_subcommand(1);

  Common common;
  auto* forward = app.add_subcommand("forward", "solve the forward problem and store the fields");
  add_common(forward, common);

  double sigma = -1.0;
  auto* make_data = app.add_subcommand("make-data", "restrict, add noise and build Cauchy data");
  add_common(make_data, common);
  make_data->add_option("--sigma", sigma, "noise level (overrides observation.sigma)");

  auto* invert = app.add_subcommand("invert", "minimize the functional and recover coefficients");
  add_common(invert, common);
  double lambda = -1.0;
  invert->add_option("--lambda", lambda, "Carleman parameter (overrides inversion.lambda)");

  auto* evaluate = app.add_subcommand("evaluate", "error metrics of a stored reconstruction");
  add_common(evaluate, common);

  auto* sweep = app.add_subcommand("sweep-lambda", "invert for a list of lambdas");
  add_common(sweep, common);
  std::vector<double> lambdas{0, 1, 2, 3, 4, 5};
  std::string sweep_out;
  sweep->add_option("--lambdas", lambdas, "lambda values")->delimiter(',');
  sweep->add_option("-o,--output", sweep_out, "CSV path (default <output.dir>/sweep_lambda.csv)");

  auto* probe = app.add_subcommand("probe", "diagnostic probes");
  probe->require_subcommand(1);
  auto* volterra = probe->add_subcommand("volterra", "Volterra estimate ratio on random smooth fields");
  add_common(volterra, common);
  VolterraArgs vargs;
  volterra->add_option("--fields", vargs.fields, "number of random fields")->check(CLI::PositiveNumber);
  volterra->add_option("--seed", vargs.seed, "first seed");
  volterra->add_option("--lambdas", vargs.lambdas, "lambda values")->delimiter(',');
  auto* convexity = probe->add_subcommand("convexity", "second differences of J along random segments");
  add_common(convexity, common);
  ConvexityArgs cargs;
  convexity->add_option("--trials", cargs.options.trials)->check(CLI::PositiveNumber);
  convexity->add_option("--points", cargs.options.points)->check(CLI::Range(3, 1000));
  convexity->add_option("--perturbation", cargs.options.perturbation)->check(CLI::PositiveNumber);
  convexity->add_option("--seed", cargs.options.seed);
  convexity->add_flag("--theory", cargs.theory, "use xi = 2 exp(-lambda T^2 / 4)");

  auto* exp = app.add_subcommand("export", "convert a field file to CSV, VTK or back to binary");
  ExportArgs eargs;
  exp->add_option("input", eargs.input, "field file (.fld) or CSV export")->required()->check(CLI::ExistingFile);
  exp->add_option("-f,--format", eargs.format, "csv, vtk or fld")
      ->check(CLI::IsMember({"csv", "vtk", "fld"}));
  exp->add_option("-o,--output", eargs.output, "output path (default stdout)");
  auto* topt = exp->add_option("--t", eargs.t, "export the time slice nearest to t");
  exp->add_option("--k", eargs.k, "export time slice k")->excludes(topt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto set_number = [&](const char* key, double v) {
    std::ostringstream os;
    os << std::setprecision(17) << key << '=' << v;
    common.overrides.push_back(os.str());
  };
  if (sigma >= 0.0) set_number("observation.sigma", sigma);
  if (lambda >= 0.0) set_number("inversion.lambda", lambda);

  try {
    if (*forward) return cmd_forward(common);
    if (*make_data) return cmd_make_data(common);
    if (*invert) return cmd_invert(common);
    if (*evaluate) return cmd_evaluate(common);
    if (*sweep) return cmd_sweep(common, lambdas, sweep_out);
    if (*volterra) return cmd_probe_volterra(common, vargs);
    if (*convexity) return cmd_probe_convexity(common, cargs);
    if (*exp) return cmd_export(eargs);
  } catch (const ConfigError& e) {
    log("config error: " + std::string(e.what()));
    return 2;
  } catch (const std::invalid_argument& e) {
    log("config error: " + std::string(e.what()));
    return 2;
  } catch (const NumericalError& e) {
    log("numerical failure: " + std::string(e.what()));
    return 3;
  } catch (const std::exception& e) {
    log("error: " + std::string(e.what()));
    return 1;
  }
  return 0;
}
