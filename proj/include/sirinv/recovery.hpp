#pragma once

#include <array>
#include <optional>
#include <span>

#include "sirinv/convexification.hpp"

namespace sirinv {

struct Coefficients {
  SpatialField beta, gamma;
};

/// beta = v1(T/2) r1 + r2, gamma = v3(T/2) r3 + r4. With `time_averaged`, the
/// full t-dependent expression (v - int w) r + r' is averaged over all time nodes.
Coefficients recover_coefficients(const WField& W, const ObservationSet& obs,
                                  bool time_averaged = false);

/// rho = int_{T/2}^t v + p for S, I, R. The snapshot slice equals p exactly.
std::array<ScalarField, 3> recover_populations(const WField& W, const ObservationSet& obs);

struct Reconstruction {
  Coefficients coefficients;
  std::array<ScalarField, 3> rho;
};

Reconstruction reconstruct(const WField& W, const ObservationSet& obs, bool time_averaged = false);

struct GroundTruth {
  Coefficients coefficients;
  std::array<ScalarField, 3> rho;            // on the reconstruction grid
  std::optional<SpatialField> beta_mask;     // 1 inside the inclusion
  std::optional<SpatialField> gamma_mask;
};

struct MetricOptions {
  double eta = 0.5;       // Q_etaT = Omega x ((1-eta)T/2, (1+eta)T/2)
  int boundary_layers = 0;  // node layers excluded from coefficient norms
};

struct Metrics {
  double beta_rel_l2 = 0.0, gamma_rel_l2 = 0.0;
  double beta_max = 0.0, gamma_max = 0.0;      // max-norm error relative to max|truth|
  std::array<double, 3> rho_rel_l2{}, rho_rel_l2_eta{}, rho_max{};
  double beta_contrast = 0.0, gamma_contrast = 0.0;            // reconstructed, in/out means
  double beta_true_contrast = 0.0, gamma_true_contrast = 0.0;
};

/// sqrt(sum w (r - t)^2 / sum w t^2); 0 when both vanish.
double relative_l2(std::span<const double> recon, std::span<const double> truth,
                   std::span<const double> weights);
/// max|r - t| / max|t|, absolute when the truth vanishes.
double relative_max(std::span<const double> recon, std::span<const double> truth,
                    std::span<const double> weights);
/// Weighted mean inside the mask divided by the weighted mean outside.
double inclusion_contrast(const SpatialField& f, const SpatialField& mask);

Metrics error_metrics(const Reconstruction& recon, const GroundTruth& truth,
                      const MetricOptions& options = {});

}  // namespace sirinv
