#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sirinv/forward.hpp"
#include "sirinv/grid.hpp"
#include "sirinv/spline.hpp"

namespace sirinv {

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Multiplicative uniform noise: p_i(1 + sigma*z), f_i(1 + sigma*z) with
/// independent z ~ U[-1, 1] per node. Fluxes are left untouched.
/// Draw order: p1, p2, p3 (spatial row-major), then f1, f2, f3 ((k, j) order).
RawObservations add_noise(const RawObservations& raw, const NoiseSpec& spec);

/// Natural-spline time derivatives of a series sampled every `ht`.
SplineDerivatives spline_time_derivatives(std::span<const double> series, double ht);

/// Outward normal derivatives on the four sides at one time level.
struct BoundarySlopes {
  std::vector<double> left, right;   // indexed by j
  std::vector<double> bottom, top;   // indexed by i

  static BoundarySlopes from_trace(const Grid& g, const BoundaryTrace& trace, int k);
};

/// Spline-based spatial derivatives of a snapshot field: 1-D cubic splines
/// along each x-line and each y-line. Natural ends by default; with `normal`
/// the ends are clamped to the known Neumann data.
struct SpatialDerivatives {
  SpatialField dx, dy, dxx, dyy;
  SpatialField laplacian() const;
};

SpatialDerivatives spline_spatial_derivatives(const SpatialField& p,
                                              const BoundarySlopes* normal = nullptr);
SpatialField spline_spatial_laplacian(const SpatialField& p, const BoundarySlopes* normal = nullptr);

/// div(p q) assembled from spline derivatives of p and grid differences of q.
SpatialField spline_divergence_of_product(const SpatialField& p, const SpatialDerivatives& dp,
                                          const VelocityField& q);

struct RCoefficients {
  std::array<SpatialField, 4> r;
  double kappa = 0.0;  // min(|p1|, |p2|) over all nodes
};

/// r1 = -1/(p1 p2), r2 = -r1 [c Lap p1 - div(p1 qS)], r3 = 1/p2,
/// r4 = -r3 [c Lap p3 - div(p3 qR)], all with spline derivatives (clamped to
/// the fluxes g1, g3 when given).
/// Throws NumericalError naming the offending node when min(|p1|,|p2|) < kappa_floor.
RCoefficients build_r_coefficients(const SpatialField& p1, const SpatialField& p2,
                                   const SpatialField& p3, const VelocityField& qS,
                                   const VelocityField& qR, double c, double kappa_floor,
                                   const BoundarySlopes* g1 = nullptr,
                                   const BoundarySlopes* g3 = nullptr);

/// Everything the convexification functional needs from the measurements.
struct ObservationSet {
  Grid grid;
  double c = 0.0;
  std::array<VelocityField, 3> q;

  std::array<SpatialField, 3> p;
  std::array<std::vector<double>, 3> f;  // (k, j) on x = b
  std::array<BoundaryTrace, 3> g;
  std::array<std::vector<double>, 3> dt_f, dtt_f;
  std::array<BoundaryTrace, 3> dt_g, dtt_g;
  std::array<SpatialField, 4> r;

  double kappa = 0.0;
  double sigma = 0.0;

  /// Component `comp` (0..5) of F = (f1', f2', f3', f1'', f2'', f3'') at (k, j).
  double F(int comp, int k, int j) const;
  /// Component `comp` of G on a side, indexed like BoundaryTrace.
  const BoundaryTrace& G(int comp) const;
};

/// Splines the (possibly noisy) traces in time, builds r1..r4 and packs F, G.
/// Spatial splines of p1, p3 are clamped to the snapshot fluxes.
ObservationSet build_cauchy_vectors(const RawObservations& raw, double c,
                                    const std::array<VelocityField, 3>& q, double sigma,
                                    double kappa_floor);

}  // namespace sirinv
