#include "sirinv/observation.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sirinv/errors.hpp"

namespace sirinv {

RawObservations add_noise(const RawObservations& raw, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0 && spec.sigma <= 0.2))
    throw std::invalid_argument("add_noise: sigma must lie in [0, 0.2]");
  RawObservations out = raw;
  if (spec.sigma == 0.0) return out;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (auto& p : out.p)
    for (auto& v : p.values) v *= 1.0 + spec.sigma * uniform(rng);
  for (auto& f : out.f)
    for (auto& v : f) v *= 1.0 + spec.sigma * uniform(rng);
  return out;
}

SplineDerivatives spline_time_derivatives(std::span<const double> series, double ht) {
  return spline_derivatives_uniform(series, ht);
}

SpatialField SpatialDerivatives::laplacian() const {
  SpatialField out(dxx.grid);
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] = dxx.values[n] + dyy.values[n];
  return out;
}

BoundarySlopes BoundarySlopes::from_trace(const Grid& g, const BoundaryTrace& trace, int k) {
  BoundarySlopes b;
  const auto xs = static_cast<std::ptrdiff_t>(BoundaryTrace::side_index(g, k, 0, true));
  const auto ys = static_cast<std::ptrdiff_t>(BoundaryTrace::side_index(g, k, 0, false));
  const auto ny = static_cast<std::ptrdiff_t>(g.nodes_y()), nx = static_cast<std::ptrdiff_t>(g.nodes_x());
  b.left.assign(trace.left.begin() + xs, trace.left.begin() + xs + ny);
  b.right.assign(trace.right.begin() + xs, trace.right.begin() + xs + ny);
  b.bottom.assign(trace.bottom.begin() + ys, trace.bottom.begin() + ys + nx);
  b.top.assign(trace.top.begin() + ys, trace.top.begin() + ys + nx);
  return b;
}

SpatialDerivatives spline_spatial_derivatives(const SpatialField& p, const BoundarySlopes* normal) {
  const Grid& g = p.grid;
  SpatialDerivatives d{SpatialField(g), SpatialField(g), SpatialField(g), SpatialField(g)};
  std::vector<double> line(g.nodes_x());
  SplineEnds ends;
  for (int j = 0; j <= g.ny; ++j) {
    for (int i = 0; i <= g.nx; ++i) line[static_cast<std::size_t>(i)] = p(j, i);
    if (normal) {
      // Outward normal at x = a points in -x.
      ends.left_slope = -normal->left[static_cast<std::size_t>(j)];
      ends.right_slope = normal->right[static_cast<std::size_t>(j)];
    }
    const auto s = spline_derivatives_uniform(line, g.hx, ends);
    for (int i = 0; i <= g.nx; ++i) {
      d.dx(j, i) = s.first[static_cast<std::size_t>(i)];
      d.dxx(j, i) = s.second[static_cast<std::size_t>(i)];
    }
  }
  line.assign(g.nodes_y(), 0.0);
  for (int i = 0; i <= g.nx; ++i) {
    for (int j = 0; j <= g.ny; ++j) line[static_cast<std::size_t>(j)] = p(j, i);
    if (normal) {
      ends.left_slope = -normal->bottom[static_cast<std::size_t>(i)];
      ends.right_slope = normal->top[static_cast<std::size_t>(i)];
    }
    const auto s = spline_derivatives_uniform(line, g.hy, ends);
    for (int j = 0; j <= g.ny; ++j) {
      d.dy(j, i) = s.first[static_cast<std::size_t>(j)];
      d.dyy(j, i) = s.second[static_cast<std::size_t>(j)];
    }
  }
  return d;
}

SpatialField spline_spatial_laplacian(const SpatialField& p, const BoundarySlopes* normal) {
  return spline_spatial_derivatives(p, normal).laplacian();
}

SpatialField spline_divergence_of_product(const SpatialField& p, const SpatialDerivatives& dp,
                                          const VelocityField& q) {
  const Grid& g = p.grid;
  const auto shape = FieldShape::of(g, true);
  SpatialField div_q(g);
  apply_axis(Stencil1D::first_derivative(g.nx + 1, g.hx), Axis::X, shape, q.qx.values, div_q.values);
  apply_axis(Stencil1D::first_derivative(g.ny + 1, g.hy), Axis::Y, shape, q.qy.values,
             div_q.values, 1.0, false, true);
  SpatialField out(g);
  for (std::size_t n = 0; n < out.values.size(); ++n)
    out.values[n] = q.qx.values[n] * dp.dx.values[n] + q.qy.values[n] * dp.dy.values[n] +
                    p.values[n] * div_q.values[n];
  return out;
}

RCoefficients build_r_coefficients(const SpatialField& p1, const SpatialField& p2,
                                   const SpatialField& p3, const VelocityField& qS,
                                   const VelocityField& qR, double c, double kappa_floor,
                                   const BoundarySlopes* g1, const BoundarySlopes* g3) {
  const Grid& g = p1.grid;
  RCoefficients out;
  out.kappa = INFINITY;
  std::size_t worst = 0;
  for (std::size_t n = 0; n < p1.values.size(); ++n) {
    const double m = std::min(std::abs(p1.values[n]), std::abs(p2.values[n]));
    if (m < out.kappa) {
      out.kappa = m;
      worst = n;
    }
  }
  if (!(out.kappa >= kappa_floor)) {
    std::ostringstream msg;
    msg << "snapshot violates the positivity floor: min(|p1|,|p2|) = " << out.kappa << " < "
        << kappa_floor << " at node (j=" << worst / g.nodes_x() << ", i=" << worst % g.nodes_x()
        << ", x=" << g.x(static_cast<int>(worst % g.nodes_x()))
        << ", y=" << g.y(static_cast<int>(worst / g.nodes_x())) << ")";
    throw NumericalError(msg.str());
  }

  const auto d1 = spline_spatial_derivatives(p1, g1);
  const auto d3 = spline_spatial_derivatives(p3, g3);
  const auto lap1 = d1.laplacian(), lap3 = d3.laplacian();
  const auto div1 = spline_divergence_of_product(p1, d1, qS);
  const auto div3 = spline_divergence_of_product(p3, d3, qR);
  for (auto& r : out.r) r = SpatialField(g);
  for (std::size_t n = 0; n < p1.values.size(); ++n) {
    const double r1 = -1.0 / (p1.values[n] * p2.values[n]);
    const double r3 = 1.0 / p2.values[n];
    out.r[0].values[n] = r1;
    out.r[1].values[n] = -r1 * (c * lap1.values[n] - div1.values[n]);
    out.r[2].values[n] = r3;
    out.r[3].values[n] = -r3 * (c * lap3.values[n] - div3.values[n]);
  }
  return out;
}

double ObservationSet::F(int comp, int k, int j) const {
  const auto idx = BoundaryTrace::side_index(grid, k, j, true);
  return comp < 3 ? dt_f[static_cast<std::size_t>(comp)][idx] : dtt_f[static_cast<std::size_t>(comp - 3)][idx];
}

const BoundaryTrace& ObservationSet::G(int comp) const {
  return comp < 3 ? dt_g[static_cast<std::size_t>(comp)] : dtt_g[static_cast<std::size_t>(comp - 3)];
}

namespace {

/// Splines every column (fixed `along`) of a (k, along) array in time.
void spline_columns(const std::vector<double>& data, std::size_t n_along, std::size_t n_t,
                    double ht, std::vector<double>& d1, std::vector<double>& d2) {
  d1.assign(data.size(), 0.0);
  d2.assign(data.size(), 0.0);
  std::vector<double> series(n_t);
  for (std::size_t a = 0; a < n_along; ++a) {
    for (std::size_t k = 0; k < n_t; ++k) series[k] = data[k * n_along + a];
    const auto s = spline_time_derivatives(series, ht);
    for (std::size_t k = 0; k < n_t; ++k) {
      d1[k * n_along + a] = s.first[k];
      d2[k * n_along + a] = s.second[k];
    }
  }
}

void spline_trace(const Grid& g, const BoundaryTrace& b, BoundaryTrace& d1, BoundaryTrace& d2) {
  d1 = BoundaryTrace(g);
  d2 = BoundaryTrace(g);
  if (b.all_zero()) return;
  spline_columns(b.left, g.nodes_y(), g.nodes_t(), g.ht, d1.left, d2.left);
  spline_columns(b.right, g.nodes_y(), g.nodes_t(), g.ht, d1.right, d2.right);
  spline_columns(b.bottom, g.nodes_x(), g.nodes_t(), g.ht, d1.bottom, d2.bottom);
  spline_columns(b.top, g.nodes_x(), g.nodes_t(), g.ht, d1.top, d2.top);
}

}  // namespace

ObservationSet build_cauchy_vectors(const RawObservations& raw, double c,
                                    const std::array<VelocityField, 3>& q, double sigma,
                                    double kappa_floor) {
  const Grid& g = raw.grid;
  ObservationSet obs;
  obs.grid = g;
  obs.c = c;
  obs.q = q;
  obs.p = raw.p;
  obs.f = raw.f;
  obs.g = raw.g;
  obs.sigma = sigma;
  for (int comp = 0; comp < 3; ++comp) {
    const auto i = static_cast<std::size_t>(comp);
    spline_columns(raw.f[i], g.nodes_y(), g.nodes_t(), g.ht, obs.dt_f[i], obs.dtt_f[i]);
    spline_trace(g, raw.g[i], obs.dt_g[i], obs.dtt_g[i]);
  }
  const auto g1 = BoundarySlopes::from_trace(g, raw.g[0], g.snapshot_index());
  const auto g3 = BoundarySlopes::from_trace(g, raw.g[2], g.snapshot_index());
  auto rc = build_r_coefficients(raw.p[0], raw.p[1], raw.p[2], q[0], q[2], c, kappa_floor, &g1, &g3);
  obs.r = std::move(rc.r);
  obs.kappa = rc.kappa;
  return obs;
}

}  // namespace sirinv
