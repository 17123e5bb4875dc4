#include "sirinv/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "sirinv/errors.hpp"
#include "sirinv/fieldio.hpp"
#include "sirinv/shapes.hpp"

namespace sirinv {

namespace fs = std::filesystem;
using nlohmann::json;

SpatialField shape_coefficient(const CoefficientShape& shape, const Grid& g,
                               std::optional<SpatialField>* mask) {
  if (shape.mask.empty()) {
    if (mask) mask->reset();
    return SpatialField(g, shape.outside);
  }
  const SpatialField m = rasterize(load_pbm(shape.mask), shape.box, g, shape.smoothing);
  if (mask) *mask = m;
  return piecewise_coefficient(m, shape.inside, shape.outside);
}

SirParams build_forward_problem(const RunConfig& cfg, const Grid& fine, TruthCoefficients* truth) {
  const auto& f = cfg.forward;
  SirParams p = SirParams::zeros(fine, f.c);
  for (int c = 0; c < 3; ++c) {
    p.q[c] = constant_velocity(fine, f.velocity[c][0], f.velocity[c][1]);
    const GaussianBump bump = f.initial[c];
    p.initial[c] = sample_spatial(fine, [&](double x, double y) { return bump(x, y); });
  }
  TruthCoefficients t;
  t.beta = shape_coefficient(f.beta, fine, &t.beta_mask);
  t.gamma = shape_coefficient(f.gamma, fine, &t.gamma_mask);
  p.beta = t.beta;
  p.gamma = t.gamma;
  p.picard_iterations = f.picard_iterations;
  if (truth) *truth = std::move(t);
  return p;
}

std::array<VelocityField, 3> observation_velocities(const RunConfig& cfg, const Grid& g) {
  std::array<VelocityField, 3> q;
  for (int c = 0; c < 3; ++c)
    q[c] = constant_velocity(g, cfg.forward.velocity[c][0], cfg.forward.velocity[c][1]);
  return q;
}

ForwardOutput run_forward(const RunConfig& cfg) {
  const Grid fine = cfg.fine_grid();
  ForwardOutput out;
  out.params = build_forward_problem(cfg, fine, &out.truth);
  out.fields = solve_forward(out.params, fine, &out.report);
  const int k = fine.snapshot_index();
  double kappa = INFINITY;
  for (int j = 0; j <= fine.ny; ++j)
    for (int i = 0; i <= fine.nx; ++i)
      kappa = std::min({kappa, std::abs(out.fields.rho_S(k, j, i)), std::abs(out.fields.rho_I(k, j, i))});
  out.snapshot_kappa = kappa;
  return out;
}

RawObservations make_raw_data(const SirFields& fields, const std::array<BoundaryTrace, 3>& flux,
                              const RunConfig& cfg) {
  const RawObservations clean = sample_observations(fields, flux, cfg.coarse_grid());
  if (cfg.observation.sigma == 0.0) return clean;
  return add_noise(clean, {cfg.observation.sigma, cfg.observation.seed});
}

ObservationSet make_observation_set(const RawObservations& raw, const RunConfig& cfg) {
  return build_cauchy_vectors(raw, cfg.forward.c, observation_velocities(cfg, raw.grid),
                              cfg.observation.sigma, cfg.observation.kappa_floor);
}

InversionOutput run_inversion(const ObservationSet& obs, const RunConfig& cfg) {
  CarlemanParams params = cfg.inversion.carleman;
  params.b = obs.grid.b;
  const Functional J(obs, params);
  OptimizerConfig oc = cfg.inversion.optimizer;
  if (cfg.inversion.volume_gradient_scale) oc.gradient_scale = volume_gradient_scale(obs.grid);
  InversionOutput out;
  out.constraints = ConstraintSet(obs);
  out.W0 = initial_guess(obs, out.constraints);
  out.run = minimize_functional(J, out.constraints, out.W0, oc);
  out.reconstruction = reconstruct(out.run.W, obs, cfg.inversion.time_averaged);
  return out;
}

GroundTruth restrict_truth(const TruthCoefficients& truth, const SirFields& fields, const Grid& coarse) {
  GroundTruth g;
  g.coefficients.beta = restrict_field(truth.beta, coarse);
  g.coefficients.gamma = restrict_field(truth.gamma, coarse);
  for (int c = 0; c < 3; ++c) g.rho[c] = restrict_field(fields[c], coarse);
  if (truth.beta_mask) g.beta_mask = restrict_field(*truth.beta_mask, coarse);
  if (truth.gamma_mask) g.gamma_mask = restrict_field(*truth.gamma_mask, coarse);
  return g;
}

namespace {

json grid_json(const Grid& g) {
  return {{"a", g.a}, {"b", g.b}, {"A", g.A}, {"T", g.T}, {"nx", g.nx}, {"ny", g.ny}, {"nt", g.nt}};
}

void prepare_dir(const std::string& dir, const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory '" + dir + "': " + ec.message());
  std::ofstream(fs::path(dir) / "config.toml") << cfg.text;
}

void write_meta(const std::string& dir, json meta, const RunConfig& cfg) {
  meta["config"] = cfg.text;
  meta["config_source"] = cfg.source;
  std::ofstream os(fs::path(dir) / "meta.json");
  if (!os) throw ConfigError("cannot write meta.json in '" + dir + "'");
  os << std::setw(2) << meta << '\n';
}

std::string at(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

/// Traces of the three populations as two field files: x-sides with nx1 = 2
/// (left, right) and y-sides with ny1 = 2 (bottom, top).
void save_traces(const std::string& dir, const std::string& stem, const Grid& g,
                 const std::array<BoundaryTrace, 3>& tr) {
  FieldFile fx, fy;
  for (FieldFile* f : {&fx, &fy}) {
    f->a = g.a;
    f->b = g.b;
    f->A = g.A;
    f->T = g.T;
    f->ncomp = 3;
    f->nt1 = static_cast<std::uint32_t>(g.nodes_t());
  }
  fx.ny1 = static_cast<std::uint32_t>(g.nodes_y());
  fx.nx1 = 2;
  fy.ny1 = 2;
  fy.nx1 = static_cast<std::uint32_t>(g.nodes_x());
  fx.values.resize(3 * fx.block_size());
  fy.values.resize(3 * fy.block_size());
  for (std::uint32_t c = 0; c < 3; ++c)
    for (int k = 0; k <= g.nt; ++k) {
      for (int j = 0; j <= g.ny; ++j) {
        const auto s = BoundaryTrace::side_index(g, k, j, true);
        fx.values[fx.index(c, k, j, 0)] = tr[c].left[s];
        fx.values[fx.index(c, k, j, 1)] = tr[c].right[s];
      }
      for (int i = 0; i <= g.nx; ++i) {
        const auto s = BoundaryTrace::side_index(g, k, i, false);
        fy.values[fy.index(c, k, 0, i)] = tr[c].bottom[s];
        fy.values[fy.index(c, k, 1, i)] = tr[c].top[s];
      }
    }
  save_field(at(dir, (stem + "_x.fld").c_str()), fx);
  save_field(at(dir, (stem + "_y.fld").c_str()), fy);
}

std::array<BoundaryTrace, 3> load_traces(const std::string& dir, const std::string& stem, const Grid& g) {
  const FieldFile fx = load_field(at(dir, (stem + "_x.fld").c_str()));
  const FieldFile fy = load_field(at(dir, (stem + "_y.fld").c_str()));
  if (fx.ncomp != 3 || fx.nt1 != g.nodes_t() || fx.ny1 != g.nodes_y() || fx.nx1 != 2 ||
      fy.ncomp != 3 || fy.nt1 != g.nodes_t() || fy.ny1 != 2 || fy.nx1 != g.nodes_x())
    throw ConfigError("trace files in '" + dir + "' do not match the configured grid");
  std::array<BoundaryTrace, 3> tr;
  for (std::uint32_t c = 0; c < 3; ++c) {
    tr[c] = BoundaryTrace(g);
    for (int k = 0; k <= g.nt; ++k) {
      for (int j = 0; j <= g.ny; ++j) {
        const auto s = BoundaryTrace::side_index(g, k, j, true);
        tr[c].left[s] = fx.values[fx.index(c, k, j, 0)];
        tr[c].right[s] = fx.values[fx.index(c, k, j, 1)];
      }
      for (int i = 0; i <= g.nx; ++i) {
        const auto s = BoundaryTrace::side_index(g, k, i, false);
        tr[c].bottom[s] = fy.values[fy.index(c, k, 0, i)];
        tr[c].top[s] = fy.values[fy.index(c, k, 1, i)];
      }
    }
  }
  return tr;
}

/// Traces on x = b for several components, nx1 = 1.
FieldFile right_trace_file(const Grid& g, const std::vector<const std::vector<double>*>& comps) {
  FieldFile f;
  f.a = g.a;
  f.b = g.b;
  f.A = g.A;
  f.T = g.T;
  f.ncomp = static_cast<std::uint32_t>(comps.size());
  f.nt1 = static_cast<std::uint32_t>(g.nodes_t());
  f.ny1 = static_cast<std::uint32_t>(g.nodes_y());
  f.nx1 = 1;
  for (const auto* c : comps) f.values.insert(f.values.end(), c->begin(), c->end());
  return f;
}

void check_box(const FieldFile& f, const Grid& g, const std::string& what) {
  if (f.a != g.a || f.b != g.b || f.A != g.A || f.T != g.T)
    throw ConfigError(what + ": domain box does not match the configuration");
}

}  // namespace

void write_forward_archive(const std::string& dir, const ForwardOutput& out, const RunConfig& cfg) {
  prepare_dir(dir, cfg);
  const Grid& g = out.fields.grid();
  save_field(at(dir, "rho.fld"),
             make_field_file({&out.fields.rho_S, &out.fields.rho_I, &out.fields.rho_R}));
  const SpatialField none(g, 0.0);
  save_field(at(dir, "truth.fld"),
             make_field_file({&out.truth.beta, &out.truth.gamma,
                              out.truth.beta_mask ? &*out.truth.beta_mask : &none,
                              out.truth.gamma_mask ? &*out.truth.gamma_mask : &none}));
  save_traces(dir, "flux", g, out.params.flux);
  json meta;
  meta["stage"] = "forward";
  meta["grid"] = grid_json(g);
  meta["snapshot_kappa"] = out.snapshot_kappa;
  meta["max_relative_residual"] = out.report.max_relative_residual;
  meta["negative_count"] = out.report.negative_count;
  meta["min_value"] = out.report.min_value;
  meta["warnings"] = out.report.warnings;
  meta["has_beta_mask"] = out.truth.beta_mask.has_value();
  meta["has_gamma_mask"] = out.truth.gamma_mask.has_value();
  write_meta(dir, meta, cfg);
}

ForwardArchive read_forward_archive(const std::string& dir, const RunConfig& cfg) {
  const Grid g = cfg.fine_grid();
  ForwardArchive a;
  const FieldFile rho = load_field(at(dir, "rho.fld"));
  check_box(rho, g, dir);
  auto fields = scalar_fields(rho, g);
  if (fields.size() != 3) throw ConfigError(dir + "/rho.fld: expected 3 components");
  a.fields = {std::move(fields[0]), std::move(fields[1]), std::move(fields[2])};
  auto truth = spatial_fields(load_field(at(dir, "truth.fld")), g);
  if (truth.size() != 4) throw ConfigError(dir + "/truth.fld: expected 4 components");
  a.truth.beta = truth[0];
  a.truth.gamma = truth[1];
  std::ifstream mf(at(dir, "meta.json"));
  if (!mf) throw ConfigError("missing meta.json in '" + dir + "'");
  const json meta = json::parse(mf);
  if (meta.value("has_beta_mask", false)) a.truth.beta_mask = truth[2];
  if (meta.value("has_gamma_mask", false)) a.truth.gamma_mask = truth[3];
  a.flux = load_traces(dir, "flux", g);
  return a;
}

void write_data_archive(const std::string& dir, const RawObservations& raw, const ObservationSet& obs,
                        const RunConfig& cfg) {
  prepare_dir(dir, cfg);
  const Grid& g = raw.grid;
  save_field(at(dir, "p.fld"), make_field_file({&raw.p[0], &raw.p[1], &raw.p[2]}));
  save_field(at(dir, "f.fld"), right_trace_file(g, {&raw.f[0], &raw.f[1], &raw.f[2]}));
  save_traces(dir, "g", g, raw.g);
  save_field(at(dir, "r.fld"), make_field_file({&obs.r[0], &obs.r[1], &obs.r[2], &obs.r[3]}));
  save_field(at(dir, "F.fld"), right_trace_file(g, {&obs.dt_f[0], &obs.dt_f[1], &obs.dt_f[2],
                                                    &obs.dtt_f[0], &obs.dtt_f[1], &obs.dtt_f[2]}));
  json meta;
  meta["stage"] = "make-data";
  meta["grid"] = grid_json(g);
  meta["sigma"] = cfg.observation.sigma;
  meta["seed"] = cfg.observation.seed;
  meta["kappa"] = obs.kappa;
  meta["kappa_floor"] = cfg.observation.kappa_floor;
  write_meta(dir, meta, cfg);
}

RawObservations read_data_archive(const std::string& dir, const RunConfig& cfg) {
  const Grid g = cfg.coarse_grid();
  RawObservations raw;
  raw.grid = g;
  const FieldFile pf = load_field(at(dir, "p.fld"));
  check_box(pf, g, dir);
  auto p = spatial_fields(pf, g);
  if (p.size() != 3) throw ConfigError(dir + "/p.fld: expected 3 components");
  for (int c = 0; c < 3; ++c) raw.p[c] = std::move(p[static_cast<std::size_t>(c)]);
  const FieldFile ff = load_field(at(dir, "f.fld"));
  if (ff.ncomp != 3 || ff.nt1 != g.nodes_t() || ff.ny1 != g.nodes_y() || ff.nx1 != 1)
    throw ConfigError(dir + "/f.fld: shape does not match the configured grid");
  for (std::uint32_t c = 0; c < 3; ++c) {
    const auto first = ff.values.begin() + static_cast<std::ptrdiff_t>(c * ff.block_size());
    raw.f[c].assign(first, first + static_cast<std::ptrdiff_t>(ff.block_size()));
  }
  raw.g = load_traces(dir, "g", g);
  return raw;
}

void write_metrics_csv(std::ostream& os, const Metrics& m) {
  os << std::setprecision(17);
  os << "metric,value\n";
  os << "beta_rel_l2," << m.beta_rel_l2 << "\ngamma_rel_l2," << m.gamma_rel_l2 << '\n';
  os << "beta_max," << m.beta_max << "\ngamma_max," << m.gamma_max << '\n';
  const char* names[3] = {"S", "I", "R"};
  for (int c = 0; c < 3; ++c) {
    os << "rho_" << names[c] << "_rel_l2," << m.rho_rel_l2[c] << '\n';
    os << "rho_" << names[c] << "_rel_l2_eta," << m.rho_rel_l2_eta[c] << '\n';
    os << "rho_" << names[c] << "_max," << m.rho_max[c] << '\n';
  }
  os << "beta_contrast," << m.beta_contrast << "\nbeta_true_contrast," << m.beta_true_contrast << '\n';
  os << "gamma_contrast," << m.gamma_contrast << "\ngamma_true_contrast," << m.gamma_true_contrast << '\n';
}

std::string metrics_json(const Metrics& m) {
  json j;
  j["beta_rel_l2"] = m.beta_rel_l2;
  j["gamma_rel_l2"] = m.gamma_rel_l2;
  j["beta_max"] = m.beta_max;
  j["gamma_max"] = m.gamma_max;
  j["rho_rel_l2"] = m.rho_rel_l2;
  j["rho_rel_l2_eta"] = m.rho_rel_l2_eta;
  j["rho_max"] = m.rho_max;
  j["beta_contrast"] = m.beta_contrast;
  j["beta_true_contrast"] = m.beta_true_contrast;
  j["gamma_contrast"] = m.gamma_contrast;
  j["gamma_true_contrast"] = m.gamma_true_contrast;
  return j.dump(2);
}

void write_inversion_archive(const std::string& dir, const InversionOutput& out,
                             const ObservationSet& obs, const RunConfig& cfg,
                             const std::optional<Metrics>& metrics) {
  prepare_dir(dir, cfg);
  const auto& rec = out.reconstruction;
  std::vector<ScalarField> w;
  for (int c = 0; c < kWComponents; ++c) w.push_back(out.run.W.component_field(c));
  save_field(at(dir, "W.fld"),
             make_field_file(std::vector<const ScalarField*>{&w[0], &w[1], &w[2], &w[3], &w[4], &w[5]}));
  save_field(at(dir, "coefficients.fld"),
             make_field_file({&rec.coefficients.beta, &rec.coefficients.gamma}));
  save_field(at(dir, "rho.fld"), make_field_file({&rec.rho[0], &rec.rho[1], &rec.rho[2]}));
  {
    std::ofstream os(at(dir, "trace.csv"));
    write_trace_csv(os, out.run.result.trace);
  }
  if (metrics) {
    std::ofstream(at(dir, "metrics.json")) << metrics_json(*metrics) << '\n';
    std::ofstream os(at(dir, "metrics.csv"));
    write_metrics_csv(os, *metrics);
  }
  const auto& r = out.run.result;
  json meta;
  meta["stage"] = "invert";
  meta["grid"] = grid_json(obs.grid);
  meta["lambda"] = cfg.inversion.carleman.lambda;
  meta["xi"] = cfg.inversion.carleman.xi;
  meta["sigma"] = obs.sigma;
  meta["kappa"] = obs.kappa;
  meta["iterations"] = r.iterations;
  meta["status"] = to_string(r.status);
  meta["grad_norm"] = r.grad_norm;
  meta["final_J"] = r.trace.empty() ? 0.0 : r.trace.back().J;
  double max_residual = 0.0;
  for (const auto& row : r.trace) max_residual = std::max(max_residual, row.constraint_residual);
  meta["max_constraint_residual"] = max_residual;
  meta["regularization_norm"] = to_string(cfg.inversion.carleman.norm);
  meta["regularization_note"] =
      "discrete norm with derivatives up to order 2 in space and 1 in time replaces the H4 norm";
  meta["time_averaged_coefficients"] = cfg.inversion.time_averaged;
  write_meta(dir, meta, cfg);
}

Reconstruction read_reconstruction(const std::string& dir, const RunConfig& cfg) {
  const Grid g = cfg.coarse_grid();
  Reconstruction rec;
  auto coef = spatial_fields(load_field(at(dir, "coefficients.fld")), g);
  if (coef.size() != 2) throw ConfigError(dir + "/coefficients.fld: expected 2 components");
  rec.coefficients = {coef[0], coef[1]};
  auto rho = scalar_fields(load_field(at(dir, "rho.fld")), g);
  if (rho.size() != 3) throw ConfigError(dir + "/rho.fld: expected 3 components");
  for (int c = 0; c < 3; ++c) rec.rho[c] = std::move(rho[static_cast<std::size_t>(c)]);
  return rec;
}

}  // namespace sirinv
