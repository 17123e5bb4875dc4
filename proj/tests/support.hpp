#pragma once

#include <cmath>
#include <random>

#include "sirinv/convexification.hpp"
#include "sirinv/forward.hpp"
#include "sirinv/observation.hpp"

namespace sirinv::testing {

/// Smooth analytic observations on g, with nonzero fluxes so every
/// constraint relation carries data.
inline RawObservations smooth_raw(const Grid& g) {
  RawObservations raw;
  raw.grid = g;
  for (int c = 0; c < 3; ++c) {
    const double s = 0.1 * (c + 1);
    raw.p[c] = sample_spatial(g, [&](double x, double y) { return 1.0 + s * std::sin(2.0 * x + y); });
    raw.f[c].assign(g.nodes_t() * g.nodes_y(), 0.0);
    for (int k = 0; k <= g.nt; ++k)
      for (int j = 0; j <= g.ny; ++j)
        raw.f[c][BoundaryTrace::side_index(g, k, j, true)] =
            1.0 + s * std::sin(2.0 * g.b + g.y(j)) + 0.3 * s * std::sin(1.5 * g.t(k) + c) * std::cos(g.y(j));
    raw.g[c] = BoundaryTrace(g);
    auto& tr = raw.g[c];
    for (int k = 0; k <= g.nt; ++k) {
      const double t = g.t(k);
      for (int j = 0; j <= g.ny; ++j) {
        tr.left[BoundaryTrace::side_index(g, k, j, true)] = 0.05 * s * std::cos(t + g.y(j));
        tr.right[BoundaryTrace::side_index(g, k, j, true)] = -0.04 * s * std::sin(t - g.y(j));
      }
      for (int i = 0; i <= g.nx; ++i) {
        tr.bottom[BoundaryTrace::side_index(g, k, i, false)] = 0.03 * s * std::cos(2.0 * t + g.x(i));
        tr.top[BoundaryTrace::side_index(g, k, i, false)] = 0.02 * s * std::sin(t * g.x(i));
      }
    }
  }
  return raw;
}

inline std::array<VelocityField, 3> velocities(const Grid& g) {
  return {constant_velocity(g, 0.2, 0.2), constant_velocity(g, 0.1, -0.1), constant_velocity(g, 0.2, 0.0)};
}

inline ObservationSet smooth_observations(const Grid& g, double c = 0.05) {
  return build_cauchy_vectors(smooth_raw(g), c, velocities(g), 0.0, 1e-3);
}

inline WField random_w(const Grid& g, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  WField W(g);
  for (auto& v : W.values) v = u(rng);
  return W;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

}  // namespace sirinv::testing
