#include "sirinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sirinv {

Grid build_grid(double a, double b, double A, double T, int nx, int ny, int nt) {
  if (!(a < b)) throw std::invalid_argument("grid: require a < b");
  if (!(A > 0.0)) throw std::invalid_argument("grid: require A > 0");
  if (!(T > 0.0)) throw std::invalid_argument("grid: require T > 0");
  if (nx < 4 || ny < 4) throw std::invalid_argument("grid: require nx, ny >= 4");
  if (nt < 2) throw std::invalid_argument("grid: require nt >= 2");
  if (nt % 2 != 0)
    throw std::invalid_argument("grid: nt must be even so that t = T/2 is a node (got " +
                                std::to_string(nt) + ")");
  Grid g;
  g.a = a;
  g.b = b;
  g.A = A;
  g.T = T;
  g.nx = nx;
  g.ny = ny;
  g.nt = nt;
  g.hx = (b - a) / nx;
  g.hy = 2.0 * A / ny;
  g.ht = T / nt;
  return g;
}

bool grid_nests(const Grid& coarse, const Grid& fine) {
  if (coarse.a != fine.a || coarse.b != fine.b || coarse.A != fine.A || coarse.T != fine.T)
    return false;
  return fine.nx % coarse.nx == 0 && fine.ny % coarse.ny == 0 && fine.nt % coarse.nt == 0;
}

bool ScalarField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool SpatialField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool BoundaryTrace::all_zero() const {
  auto zero = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  };
  return zero(left) && zero(right) && zero(bottom) && zero(top);
}

VelocityField constant_velocity(const Grid& g, double qx, double qy) {
  return {SpatialField(g, qx), SpatialField(g, qy)};
}

ScalarField time_slice_broadcast(const Grid& g, const SpatialField& s) {
  ScalarField out(g);
  for (int k = 0; k <= g.nt; ++k) std::copy(s.values.begin(), s.values.end(), out.slice(k).begin());
  return out;
}

SpatialField extract_slice(const ScalarField& f, int k) {
  SpatialField out(f.grid);
  auto s = f.slice(k);
  std::copy(s.begin(), s.end(), out.values.begin());
  return out;
}

Stencil1D Stencil1D::first_derivative(int n, double h) {
  if (n < 3) throw std::invalid_argument("first_derivative: need at least 3 points");
  Stencil1D op(n);
  const double c = 1.0 / (2.0 * h);
  op.add(0, 0, -3.0 * c);
  op.add(0, 1, 4.0 * c);
  op.add(0, 2, -1.0 * c);
  for (int r = 1; r < n - 1; ++r) {
    op.add(r, r - 1, -c);
    op.add(r, r + 1, c);
  }
  op.add(n - 1, n - 1, 3.0 * c);
  op.add(n - 1, n - 2, -4.0 * c);
  op.add(n - 1, n - 3, 1.0 * c);
  return op;
}

Stencil1D Stencil1D::second_derivative(int n, double h) {
  if (n < 4) throw std::invalid_argument("second_derivative: need at least 4 points");
  Stencil1D op(n);
  const double c = 1.0 / (h * h);
  op.add(0, 0, 2.0 * c);
  op.add(0, 1, -5.0 * c);
  op.add(0, 2, 4.0 * c);
  op.add(0, 3, -1.0 * c);
  for (int r = 1; r < n - 1; ++r) {
    op.add(r, r - 1, c);
    op.add(r, r, -2.0 * c);
    op.add(r, r + 1, c);
  }
  op.add(n - 1, n - 1, 2.0 * c);
  op.add(n - 1, n - 2, -5.0 * c);
  op.add(n - 1, n - 3, 4.0 * c);
  op.add(n - 1, n - 4, -1.0 * c);
  return op;
}

void apply_axis(const Stencil1D& op, Axis axis, const FieldShape& shape,
                std::span<const double> in, std::span<double> out, double scale, bool transpose,
                bool accumulate) {
  const std::size_t total = shape.size();
  if (in.size() != total || out.size() != total)
    throw std::invalid_argument("apply_axis: field size mismatch");
  if (!accumulate) std::fill(out.begin(), out.end(), 0.0);

  std::size_t len = 0, stride = 0;
  switch (axis) {
    case Axis::X: len = shape.nx1; stride = 1; break;
    case Axis::Y: len = shape.ny1; stride = shape.nx1; break;
    case Axis::T: len = shape.nt1; stride = shape.nx1 * shape.ny1; break;
  }
  if (static_cast<std::size_t>(op.size()) != len)
    throw std::invalid_argument("apply_axis: stencil length does not match axis");

  // Enumerate line starts: every index whose coordinate along `axis` is zero.
  const std::size_t block = stride * len;
  for (std::size_t outer = 0; outer < total; outer += block) {
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t base = outer + inner;
      for (std::size_t r = 0; r < len; ++r) {
        const auto& row = op.row(static_cast<int>(r));
        if (!transpose) {
          double acc = 0.0;
          for (const auto& e : row) acc += e.coeff * in[base + static_cast<std::size_t>(e.col) * stride];
          out[base + r * stride] += scale * acc;
        } else {
          const double v = scale * in[base + r * stride];
          if (v == 0.0) continue;
          for (const auto& e : row) out[base + static_cast<std::size_t>(e.col) * stride] += e.coeff * v;
        }
      }
    }
  }
}

GridOperators::GridOperators(const Grid& g)
    : grid_(g),
      dx_(Stencil1D::first_derivative(g.nx + 1, g.hx)),
      dy_(Stencil1D::first_derivative(g.ny + 1, g.hy)),
      dxx_(Stencil1D::second_derivative(g.nx + 1, g.hx)),
      dyy_(Stencil1D::second_derivative(g.ny + 1, g.hy)),
      dt_(Stencil1D::first_derivative(g.nt + 1, g.ht)) {}

namespace {

template <class Field>
Field laplacian_impl(const Field& f, bool spatial) {
  const Grid& g = f.grid;
  Field out(g);
  const auto shape = FieldShape::of(g, spatial);
  apply_axis(Stencil1D::second_derivative(g.nx + 1, g.hx), Axis::X, shape, f.values, out.values);
  apply_axis(Stencil1D::second_derivative(g.ny + 1, g.hy), Axis::Y, shape, f.values, out.values,
             1.0, false, true);
  return out;
}

template <class Field>
Field divergence_impl(const Field& f, const VelocityField& q, bool spatial) {
  const Grid& g = f.grid;
  const std::size_t ns = g.spatial_size();
  const std::size_t nslices = spatial ? 1 : g.nodes_t();
  std::vector<double> fx(f.values.size()), fy(f.values.size());
  for (std::size_t s = 0; s < nslices; ++s)
    for (std::size_t n = 0; n < ns; ++n) {
      fx[s * ns + n] = f.values[s * ns + n] * q.qx.values[n];
      fy[s * ns + n] = f.values[s * ns + n] * q.qy.values[n];
    }
  Field out(g);
  const auto shape = FieldShape::of(g, spatial);
  apply_axis(Stencil1D::first_derivative(g.nx + 1, g.hx), Axis::X, shape, fx, out.values);
  apply_axis(Stencil1D::first_derivative(g.ny + 1, g.hy), Axis::Y, shape, fy, out.values, 1.0,
             false, true);
  return out;
}

std::vector<double> trapezoid_1d(std::size_t n, double h) {
  std::vector<double> w(n, h);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

}  // namespace

ScalarField laplacian(const ScalarField& f) { return laplacian_impl(f, false); }
SpatialField laplacian(const SpatialField& f) { return laplacian_impl(f, true); }

ScalarField divergence_of_product(const ScalarField& f, const VelocityField& q) {
  return divergence_impl(f, q, false);
}
SpatialField divergence_of_product(const SpatialField& f, const VelocityField& q) {
  return divergence_impl(f, q, true);
}

ScalarField time_derivative(const ScalarField& f) {
  const Grid& g = f.grid;
  ScalarField out(g);
  apply_axis(Stencil1D::first_derivative(g.nt + 1, g.ht), Axis::T, FieldShape::of(g), f.values,
             out.values);
  return out;
}

void volterra_apply(const Grid& g, std::span<const double> in, std::span<double> out) {
  const std::size_t ns = g.spatial_size();
  const int m = g.snapshot_index();
  const double half = 0.5 * g.ht;
  auto at = [&](std::span<const double> s, int k, std::size_t n) {
    return s[static_cast<std::size_t>(k) * ns + n];
  };
  for (std::size_t n = 0; n < ns; ++n) {
    out[static_cast<std::size_t>(m) * ns + n] = 0.0;
    double acc = 0.0;
    for (int k = m + 1; k <= g.nt; ++k) {
      acc += half * (at(in, k - 1, n) + at(in, k, n));
      out[static_cast<std::size_t>(k) * ns + n] = acc;
    }
    acc = 0.0;
    for (int k = m - 1; k >= 0; --k) {
      acc -= half * (at(in, k, n) + at(in, k + 1, n));
      out[static_cast<std::size_t>(k) * ns + n] = acc;
    }
  }
}

void volterra_apply_transpose(const Grid& g, std::span<const double> in, std::span<double> out,
                              bool accumulate) {
  const std::size_t ns = g.spatial_size();
  const int m = g.snapshot_index();
  const double half = 0.5 * g.ht;
  if (!accumulate) std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t n = 0; n < ns; ++n) {
    auto g_at = [&](int k) { return in[static_cast<std::size_t>(k) * ns + n]; };
    auto o_at = [&](int k) -> double& { return out[static_cast<std::size_t>(k) * ns + n]; };
    // Forward half: out_k = sum_{l=m}^{k} c_l f_l, c = h/2 at l = m and l = k.
    double tail = 0.0;  // sum_{k > l} g_k
    for (int l = g.nt; l > m; --l) {
      o_at(l) += half * g_at(l) + g.ht * tail;
      tail += g_at(l);
    }
    o_at(m) += half * tail;
    // Backward half mirrors with a minus sign.
    double head = 0.0;  // sum_{k < l} g_k
    for (int l = 0; l < m; ++l) {
      o_at(l) -= half * g_at(l) + g.ht * head;
      head += g_at(l);
    }
    o_at(m) -= half * head;
  }
}

ScalarField volterra_integral(const ScalarField& f) {
  ScalarField out(f.grid);
  volterra_apply(f.grid, f.values, out.values);
  return out;
}

std::vector<double> spatial_quadrature_weights(const Grid& g) {
  const auto wx = trapezoid_1d(g.nodes_x(), g.hx);
  const auto wy = trapezoid_1d(g.nodes_y(), g.hy);
  std::vector<double> w(g.spatial_size());
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) w[g.spatial_index(j, i)] = wy[static_cast<std::size_t>(j)] * wx[static_cast<std::size_t>(i)];
  return w;
}

std::vector<double> quadrature_weights(const Grid& g) {
  const auto ws = spatial_quadrature_weights(g);
  const auto wt = trapezoid_1d(g.nodes_t(), g.ht);
  std::vector<double> w(g.size());
  for (int k = 0; k <= g.nt; ++k)
    for (std::size_t n = 0; n < ws.size(); ++n)
      w[static_cast<std::size_t>(k) * ws.size() + n] = wt[static_cast<std::size_t>(k)] * ws[n];
  return w;
}

}  // namespace sirinv
