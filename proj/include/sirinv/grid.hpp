#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace sirinv {

/// Space-time mesh over (a,b) x (-A,A) x (0,T).
///
/// Nodes are x_i = a + i*hx, y_j = -A + j*hy, t_k = k*ht. Storage of every
/// field on this grid is time-major: index (k, j, i) -> (k*(ny+1) + j)*(nx+1) + i.
struct Grid {
  double a = 0.0;
  double b = 1.0;
  double A = 0.5;
  double T = 1.0;
  int nx = 4;
  int ny = 4;
  int nt = 2;
  double hx = 0.25;
  double hy = 0.25;
  double ht = 0.5;

  // The last node is pinned to the exact endpoint so x(nx) == b bit-for-bit.
  double x(int i) const { return i == nx ? b : a + i * hx; }
  double y(int j) const { return j == ny ? A : -A + j * hy; }
  double t(int k) const { return k * ht; }

  int snapshot_index() const { return nt / 2; }

  std::size_t nodes_x() const { return static_cast<std::size_t>(nx) + 1; }
  std::size_t nodes_y() const { return static_cast<std::size_t>(ny) + 1; }
  std::size_t nodes_t() const { return static_cast<std::size_t>(nt) + 1; }
  std::size_t spatial_size() const { return nodes_x() * nodes_y(); }
  std::size_t size() const { return spatial_size() * nodes_t(); }

  std::size_t spatial_index(int j, int i) const {
    return static_cast<std::size_t>(j) * nodes_x() + static_cast<std::size_t>(i);
  }
  std::size_t index(int k, int j, int i) const {
    return static_cast<std::size_t>(k) * spatial_size() + spatial_index(j, i);
  }

  bool operator==(const Grid&) const = default;
};

/// Validates the parameters and derives the spacings. Throws
/// std::invalid_argument on odd nt, nx/ny < 4, nt < 2 or non-positive extents.
Grid build_grid(double a, double b, double A, double T, int nx, int ny, int nt);

/// True when `coarse` is obtained from `fine` by integer-stride subsampling
/// on every axis over the same physical box.
bool grid_nests(const Grid& coarse, const Grid& fine);

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0)
      : grid(g), values(g.size(), fill) {}

  double& operator()(int k, int j, int i) { return values[grid.index(k, j, i)]; }
  double operator()(int k, int j, int i) const { return values[grid.index(k, j, i)]; }

  std::span<double> slice(int k) {
    return {values.data() + static_cast<std::size_t>(k) * grid.spatial_size(), grid.spatial_size()};
  }
  std::span<const double> slice(int k) const {
    return {values.data() + static_cast<std::size_t>(k) * grid.spatial_size(), grid.spatial_size()};
  }

  bool all_finite() const;
};

struct SpatialField {
  Grid grid;
  std::vector<double> values;

  SpatialField() = default;
  explicit SpatialField(const Grid& g, double fill = 0.0)
      : grid(g), values(g.spatial_size(), fill) {}

  double& operator()(int j, int i) { return values[grid.spatial_index(j, i)]; }
  double operator()(int j, int i) const { return values[grid.spatial_index(j, i)]; }

  bool all_finite() const;
};

/// Velocity pair (q_x, q_y) sampled on spatial nodes.
struct VelocityField {
  SpatialField qx;
  SpatialField qy;
};

VelocityField constant_velocity(const Grid& g, double qx, double qy);

/// Builds a field by sampling f(x, y, t) / f(x, y) at every node.
template <class F>
ScalarField sample(const Grid& g, F&& f) {
  ScalarField out(g);
  for (int k = 0; k <= g.nt; ++k)
    for (int j = 0; j <= g.ny; ++j)
      for (int i = 0; i <= g.nx; ++i) out(k, j, i) = f(g.x(i), g.y(j), g.t(k));
  return out;
}

template <class F>
SpatialField sample_spatial(const Grid& g, F&& f) {
  SpatialField out(g);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) out(j, i) = f(g.x(i), g.y(j));
  return out;
}

/// Values on the lateral boundary S_T, one array per side. Left/right are
/// indexed (k, j) -> k*(ny+1) + j; bottom/top are indexed (k, i) -> k*(nx+1) + i.
/// Corner nodes appear on both an x-side and a y-side array.
struct BoundaryTrace {
  std::vector<double> left, right, bottom, top;

  BoundaryTrace() = default;
  explicit BoundaryTrace(const Grid& g, double fill = 0.0)
      : left(g.nodes_t() * g.nodes_y(), fill),
        right(g.nodes_t() * g.nodes_y(), fill),
        bottom(g.nodes_t() * g.nodes_x(), fill),
        top(g.nodes_t() * g.nodes_x(), fill) {}

  static std::size_t side_index(const Grid& g, int k, int along, bool x_side) {
    return static_cast<std::size_t>(k) * (x_side ? g.nodes_y() : g.nodes_x()) +
           static_cast<std::size_t>(along);
  }
  bool all_zero() const;
};

ScalarField time_slice_broadcast(const Grid& g, const SpatialField& s);
SpatialField extract_slice(const ScalarField& f, int k);

enum class Axis { X, Y, T };

/// Sparse 1-D difference operator on n equispaced points. Each row holds the
/// (column, coefficient) pairs of one output node, so both the operator and
/// its transpose can be applied along any axis of a field.
class Stencil1D {
 public:
  struct Entry {
    int col;
    double coeff;
  };

  explicit Stencil1D(int n) : rows_(static_cast<std::size_t>(n)) {}

  /// Central (f_{i+1} - f_{i-1})/2h inside; (-3f0 + 4f1 - f2)/2h at the ends.
  static Stencil1D first_derivative(int n, double h);
  /// (f_{i+1} - 2f_i + f_{i-1})/h^2 inside; (2f0 - 5f1 + 4f2 - f3)/h^2 at the ends.
  static Stencil1D second_derivative(int n, double h);

  int size() const { return static_cast<int>(rows_.size()); }
  const std::vector<Entry>& row(int r) const { return rows_[static_cast<std::size_t>(r)]; }
  void add(int r, int col, double coeff) { rows_[static_cast<std::size_t>(r)].push_back({col, coeff}); }

 private:
  std::vector<std::vector<Entry>> rows_;
};

/// Memory layout of a (possibly single-slice) field for axis-wise application.
struct FieldShape {
  std::size_t nx1;
  std::size_t ny1;
  std::size_t nt1;  // 1 for spatial fields

  static FieldShape of(const Grid& g, bool spatial_only = false) {
    return {g.nodes_x(), g.nodes_y(), spatial_only ? 1 : g.nodes_t()};
  }
  std::size_t size() const { return nx1 * ny1 * nt1; }
};

/// out (+)= scale * op(in) along `axis`; with `transpose` applies op^T instead.
void apply_axis(const Stencil1D& op, Axis axis, const FieldShape& shape,
                std::span<const double> in, std::span<double> out, double scale = 1.0,
                bool transpose = false, bool accumulate = false);

/// Difference operators shared by the functional and the observation pipeline.
class GridOperators {
 public:
  explicit GridOperators(const Grid& g);

  const Grid& grid() const { return grid_; }
  const Stencil1D& dx() const { return dx_; }
  const Stencil1D& dy() const { return dy_; }
  const Stencil1D& dxx() const { return dxx_; }
  const Stencil1D& dyy() const { return dyy_; }
  const Stencil1D& dt() const { return dt_; }

 private:
  Grid grid_;
  Stencil1D dx_, dy_, dxx_, dyy_, dt_;
};

ScalarField laplacian(const ScalarField& f);
SpatialField laplacian(const SpatialField& f);

/// d/dx(f qx) + d/dy(f qy), with the velocity broadcast over time.
ScalarField divergence_of_product(const ScalarField& f, const VelocityField& q);
SpatialField divergence_of_product(const SpatialField& f, const VelocityField& q);

ScalarField time_derivative(const ScalarField& f);

/// Trapezoid-rule integral from t = T/2 to t_k along every time line; the
/// slice at the snapshot index is exactly zero.
ScalarField volterra_integral(const ScalarField& f);

/// In-place Volterra integration of raw time-major storage and its adjoint.
void volterra_apply(const Grid& g, std::span<const double> in, std::span<double> out);
void volterra_apply_transpose(const Grid& g, std::span<const double> in, std::span<double> out,
                              bool accumulate);

/// Tensor-product trapezoid weights over the space-time nodes.
std::vector<double> quadrature_weights(const Grid& g);
/// Trapezoid weights over spatial nodes only.
std::vector<double> spatial_quadrature_weights(const Grid& g);

}  // namespace sirinv
