#include "sirinv/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sirinv {

Coefficients recover_coefficients(const WField& W, const ObservationSet& obs, bool time_averaged) {
  const Grid& g = W.grid;
  if (!(g == obs.grid)) throw std::invalid_argument("recovery: W and observations differ in grid");
  Coefficients out{SpatialField(g), SpatialField(g)};
  const std::size_t ns = g.spatial_size();
  if (!time_averaged) {
    const std::size_t base = static_cast<std::size_t>(g.snapshot_index()) * ns;
    const auto v1 = W.comp(0), v3 = W.comp(2);
    for (std::size_t s = 0; s < ns; ++s) {
      out.beta.values[s] = v1[base + s] * obs.r[0].values[s] + obs.r[1].values[s];
      out.gamma.values[s] = v3[base + s] * obs.r[2].values[s] + obs.r[3].values[s];
    }
    return out;
  }
  std::vector<double> Iw1(g.size()), Iw3(g.size());
  volterra_apply(g, W.comp(3), Iw1);
  volterra_apply(g, W.comp(5), Iw3);
  const auto v1 = W.comp(0), v3 = W.comp(2);
  const double inv = 1.0 / static_cast<double>(g.nodes_t());
  for (std::size_t k = 0; k < g.nodes_t(); ++k)
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t n = k * ns + s;
      out.beta.values[s] += inv * ((v1[n] - Iw1[n]) * obs.r[0].values[s] + obs.r[1].values[s]);
      out.gamma.values[s] += inv * ((v3[n] - Iw3[n]) * obs.r[2].values[s] + obs.r[3].values[s]);
    }
  return out;
}

std::array<ScalarField, 3> recover_populations(const WField& W, const ObservationSet& obs) {
  const Grid& g = W.grid;
  if (!(g == obs.grid)) throw std::invalid_argument("recovery: W and observations differ in grid");
  std::array<ScalarField, 3> rho;
  const std::size_t ns = g.spatial_size();
  for (int c = 0; c < 3; ++c) {
    auto& r = rho[static_cast<std::size_t>(c)];
    r = ScalarField(g);
    volterra_apply(g, W.comp(c), r.values);
    const auto& p = obs.p[static_cast<std::size_t>(c)].values;
    const std::size_t snap = static_cast<std::size_t>(g.snapshot_index());
    for (std::size_t k = 0; k < g.nodes_t(); ++k)
      for (std::size_t s = 0; s < ns; ++s) {
        // The integral is zero at the snapshot; assign p there so the slice is exact.
        double& v = r.values[k * ns + s];
        v = k == snap ? p[s] : v + p[s];
      }
  }
  return rho;
}

Reconstruction reconstruct(const WField& W, const ObservationSet& obs, bool time_averaged) {
  return {recover_coefficients(W, obs, time_averaged), recover_populations(W, obs)};
}

double relative_l2(std::span<const double> recon, std::span<const double> truth,
                   std::span<const double> weights) {
  if (recon.size() != truth.size() || weights.size() != truth.size())
    throw std::invalid_argument("metrics: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const double d = recon[n] - truth[n];
    num += weights[n] * d * d;
    den += weights[n] * truth[n] * truth[n];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

double relative_max(std::span<const double> recon, std::span<const double> truth,
                    std::span<const double> weights) {
  if (recon.size() != truth.size() || weights.size() != truth.size())
    throw std::invalid_argument("metrics: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    if (weights[n] == 0.0) continue;
    num = std::max(num, std::abs(recon[n] - truth[n]));
    den = std::max(den, std::abs(truth[n]));
  }
  return den == 0.0 ? num : num / den;
}

double inclusion_contrast(const SpatialField& f, const SpatialField& mask) {
  if (!(f.grid == mask.grid)) throw std::invalid_argument("metrics: mask grid mismatch");
  const auto w = spatial_quadrature_weights(f.grid);
  double in = 0.0, win = 0.0, out = 0.0, wout = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    const double m = std::clamp(mask.values[n], 0.0, 1.0);
    in += w[n] * m * f.values[n];
    win += w[n] * m;
    out += w[n] * (1.0 - m) * f.values[n];
    wout += w[n] * (1.0 - m);
  }
  if (win == 0.0 || wout == 0.0 || out == 0.0) return 0.0;
  return (in / win) / (out / wout);
}

Metrics error_metrics(const Reconstruction& recon, const GroundTruth& truth,
                      const MetricOptions& options) {
  const Grid& g = recon.coefficients.beta.grid;
  if (!(truth.coefficients.beta.grid == g) || !(truth.coefficients.gamma.grid == g))
    throw std::invalid_argument("metrics: coefficient grids differ");
  for (int c = 0; c < 3; ++c)
    if (!(truth.rho[static_cast<std::size_t>(c)].grid == recon.rho[static_cast<std::size_t>(c)].grid))
      throw std::invalid_argument("metrics: population grids differ");

  auto ws = spatial_quadrature_weights(g);
  const int L = options.boundary_layers;
  if (L > 0)
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i)
        if (i < L || j < L || i > g.nx - L || j > g.ny - L) ws[g.spatial_index(j, i)] = 0.0;

  Metrics m;
  m.beta_rel_l2 = relative_l2(recon.coefficients.beta.values, truth.coefficients.beta.values, ws);
  m.gamma_rel_l2 = relative_l2(recon.coefficients.gamma.values, truth.coefficients.gamma.values, ws);
  m.beta_max = relative_max(recon.coefficients.beta.values, truth.coefficients.beta.values, ws);
  m.gamma_max = relative_max(recon.coefficients.gamma.values, truth.coefficients.gamma.values, ws);

  const Grid& gt = recon.rho[0].grid;
  const auto wq = quadrature_weights(gt);
  auto weta = wq;
  const double lo = (1.0 - options.eta) * gt.T / 2.0, hi = (1.0 + options.eta) * gt.T / 2.0;
  const std::size_t ns = gt.spatial_size();
  for (int k = 0; k <= gt.nt; ++k) {
    const double t = gt.t(k);
    if (t < lo - 1e-12 || t > hi + 1e-12)
      std::fill_n(weta.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * ns), ns, 0.0);
  }
  for (std::size_t c = 0; c < 3; ++c) {
    m.rho_rel_l2[c] = relative_l2(recon.rho[c].values, truth.rho[c].values, wq);
    m.rho_rel_l2_eta[c] = relative_l2(recon.rho[c].values, truth.rho[c].values, weta);
    m.rho_max[c] = relative_max(recon.rho[c].values, truth.rho[c].values, wq);
  }
  if (truth.beta_mask) {
    m.beta_contrast = inclusion_contrast(recon.coefficients.beta, *truth.beta_mask);
    m.beta_true_contrast = inclusion_contrast(truth.coefficients.beta, *truth.beta_mask);
  }
  if (truth.gamma_mask) {
    m.gamma_contrast = inclusion_contrast(recon.coefficients.gamma, *truth.gamma_mask);
    m.gamma_true_contrast = inclusion_contrast(truth.coefficients.gamma, *truth.gamma_mask);
  }
  return m;
}

}  // namespace sirinv
