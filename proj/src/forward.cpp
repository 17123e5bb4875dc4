#include "sirinv/forward.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sirinv/errors.hpp"

namespace sirinv {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

constexpr double kResidualTarget = 1e-10;
constexpr double kNegativeThreshold = -1e-8;

/// I/ht - c*Lap + div(. q) with ghost-reflected Neumann rows, plus the row
/// sums of the advection part (the zero-order coefficient of each row).
struct Transport {
  SpMat matrix;
  Vec zero_order;
};

Transport assemble_transport(const Grid& g, double c, const VelocityField& q) {
  const int nx = g.nx, ny = g.ny;
  const double ihx2 = c / (g.hx * g.hx), ihy2 = c / (g.hy * g.hy);
  const double i2hx = 1.0 / (2.0 * g.hx), i2hy = 1.0 / (2.0 * g.hy);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(g.spatial_size() * 7);
  Vec zero_order = Vec::Zero(static_cast<Eigen::Index>(g.spatial_size()));
  auto id = [&](int j, int i) { return static_cast<int>(g.spatial_index(j, i)); };

  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const int row = id(j, i);
      double diag = 1.0 / g.ht;
      double adv = 0.0;
      auto advect_diag = [&](double v) {
        diag += v;
        adv += v;
      };

      // x-direction diffusion and advection
      diag += 2.0 * ihx2;
      if (i == 0) {
        trips.emplace_back(row, id(j, 1), -2.0 * ihx2);
        advect_diag((-3.0 * q.qx(j, 0) + 4.0 * q.qx(j, 1) - q.qx(j, 2)) * i2hx);
      } else if (i == nx) {
        trips.emplace_back(row, id(j, nx - 1), -2.0 * ihx2);
        advect_diag((3.0 * q.qx(j, nx) - 4.0 * q.qx(j, nx - 1) + q.qx(j, nx - 2)) * i2hx);
      } else {
        trips.emplace_back(row, id(j, i - 1), -ihx2 - q.qx(j, i - 1) * i2hx);
        trips.emplace_back(row, id(j, i + 1), -ihx2 + q.qx(j, i + 1) * i2hx);
        adv += (q.qx(j, i + 1) - q.qx(j, i - 1)) * i2hx;
      }

      // y-direction
      diag += 2.0 * ihy2;
      if (j == 0) {
        trips.emplace_back(row, id(1, i), -2.0 * ihy2);
        advect_diag((-3.0 * q.qy(0, i) + 4.0 * q.qy(1, i) - q.qy(2, i)) * i2hy);
      } else if (j == ny) {
        trips.emplace_back(row, id(ny - 1, i), -2.0 * ihy2);
        advect_diag((3.0 * q.qy(ny, i) - 4.0 * q.qy(ny - 1, i) + q.qy(ny - 2, i)) * i2hy);
      } else {
        trips.emplace_back(row, id(j - 1, i), -ihy2 - q.qy(j - 1, i) * i2hy);
        trips.emplace_back(row, id(j + 1, i), -ihy2 + q.qy(j + 1, i) * i2hy);
        adv += (q.qy(j + 1, i) - q.qy(j - 1, i)) * i2hy;
      }
      trips.emplace_back(row, row, diag);
      zero_order[row] = adv;
    }
  }
  SpMat m(static_cast<int>(g.spatial_size()), static_cast<int>(g.spatial_size()));
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return {std::move(m), std::move(zero_order)};
}

/// Right-hand-side contribution of the Neumann data at time level k.
void add_flux_terms(const Grid& g, double c, const VelocityField& q, const BoundaryTrace& flux,
                    int k, Vec& rhs) {
  const int nx = g.nx, ny = g.ny;
  for (int j = 0; j <= ny; ++j) {
    const double gl = flux.left[BoundaryTrace::side_index(g, k, j, true)];
    const double gr = flux.right[BoundaryTrace::side_index(g, k, j, true)];
    rhs[static_cast<Eigen::Index>(g.spatial_index(j, 0))] += 2.0 * c * gl / g.hx + q.qx(j, 0) * gl;
    rhs[static_cast<Eigen::Index>(g.spatial_index(j, nx))] += 2.0 * c * gr / g.hx - q.qx(j, nx) * gr;
  }
  for (int i = 0; i <= nx; ++i) {
    const double gb = flux.bottom[BoundaryTrace::side_index(g, k, i, false)];
    const double gt = flux.top[BoundaryTrace::side_index(g, k, i, false)];
    rhs[static_cast<Eigen::Index>(g.spatial_index(0, i))] += 2.0 * c * gb / g.hy + q.qy(0, i) * gb;
    rhs[static_cast<Eigen::Index>(g.spatial_index(ny, i))] += 2.0 * c * gt / g.hy - q.qy(ny, i) * gt;
  }
}

/// Backward Euler step in increment form: with M = I/ht + D the transport
/// matrix and E = diag(extra), solves (M + E) d = forcing - D u - E u and
/// returns u + d. D u is evaluated as differences to the row node plus the
/// advection row sum, so a constant state with no forcing gives d = 0 exactly.
class StepSolver {
 public:
  explicit StepSolver(Transport t)
      : base_(std::move(t.matrix)), zero_order_(std::move(t.zero_order)), work_(base_) {
    solver_.analyzePattern(work_);
    for (Eigen::Index r = 0; r < base_.rows(); ++r) diag_.push_back(&work_.coeffRef(r, r));
  }

  /// Returns the relative residual of the increment system.
  double solve(const Vec& extra, const Vec& forcing, const Vec& u, Vec& x, bool refactor) {
    if (refactor || !factored_) {
      const double* src = base_.valuePtr();
      std::copy(src, src + base_.nonZeros(), work_.valuePtr());
      for (Eigen::Index r = 0; r < extra.size(); ++r) *diag_[static_cast<std::size_t>(r)] += extra[r];
      solver_.factorize(work_);
      if (solver_.info() != Eigen::Success) return INFINITY;
      factored_ = true;
    }
    Vec rhs = forcing - extra.cwiseProduct(u);
    for (Eigen::Index c = 0; c < base_.outerSize(); ++c)
      for (SpMat::InnerIterator it(base_, c); it; ++it)
        if (it.row() != it.col()) rhs[it.row()] -= it.value() * (u[it.col()] - u[it.row()]);
    rhs -= zero_order_.cwiseProduct(u);

    Vec d = solver_.solve(rhs);
    const double bn = rhs.norm();
    Vec r = rhs - work_ * d;
    double rel = bn > 0.0 ? r.norm() / bn : r.norm();
    if (rel > kResidualTarget) {  // one step of iterative refinement
      d += solver_.solve(r);
      r = rhs - work_ * d;
      rel = bn > 0.0 ? r.norm() / bn : r.norm();
    }
    x = u + d;
    return rel;
  }

 private:
  SpMat base_;
  Vec zero_order_;
  SpMat work_;
  std::vector<double*> diag_;
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> solver_;
  bool factored_ = false;
};

Vec to_vec(std::span<const double> s) {
  return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
}

void check_params(const SirParams& p, const Grid& g) {
  if (!(p.c > 0.0)) throw std::invalid_argument("forward: viscosity c must be positive");
  auto same = [&](const SpatialField& f) { return f.values.size() == g.spatial_size(); };
  for (int comp = 0; comp < 3; ++comp) {
    if (!same(p.q[comp].qx) || !same(p.q[comp].qy) || !same(p.initial[comp]))
      throw std::invalid_argument("forward: field shape does not match grid");
    const auto& b = p.flux[comp];
    if (b.left.size() != g.nodes_t() * g.nodes_y() || b.bottom.size() != g.nodes_t() * g.nodes_x())
      throw std::invalid_argument("forward: flux trace shape does not match grid");
  }
  if (!same(p.beta) || !same(p.gamma)) throw std::invalid_argument("forward: rate shape mismatch");
  auto nonneg = [](const SpatialField& f) {
    return std::all_of(f.values.begin(), f.values.end(), [](double v) { return v >= 0.0; });
  };
  if (!nonneg(p.beta) || !nonneg(p.gamma))
    throw std::invalid_argument("forward: infection and recovery rates must be non-negative");
  for (const auto& f : p.initial)
    if (!nonneg(f)) throw std::invalid_argument("forward: initial populations must be non-negative");
  if (p.picard_iterations < 1) throw std::invalid_argument("forward: picard_iterations >= 1");
}

}  // namespace

SirParams SirParams::zeros(const Grid& g, double c) {
  SirParams p;
  p.c = c;
  for (int comp = 0; comp < 3; ++comp) {
    p.q[comp] = constant_velocity(g, 0.0, 0.0);
    p.flux[comp] = BoundaryTrace(g);
    p.initial[comp] = SpatialField(g);
  }
  p.beta = SpatialField(g);
  p.gamma = SpatialField(g);
  return p;
}

const ScalarField& SirFields::operator[](int comp) const {
  switch (comp) {
    case 0: return rho_S;
    case 1: return rho_I;
    case 2: return rho_R;
  }
  throw std::out_of_range("SirFields: component index");
}

ScalarField& SirFields::operator[](int comp) {
  return const_cast<ScalarField&>(std::as_const(*this)[comp]);
}

SirFields solve_forward(const SirParams& params, const Grid& g, ForwardReport* report) {
  check_params(params, g);
  const std::size_t ns = g.spatial_size();
  const auto n = static_cast<Eigen::Index>(ns);

  SirFields out{ScalarField(g), ScalarField(g), ScalarField(g)};
  for (int comp = 0; comp < 3; ++comp) {
    const auto& init = params.initial[comp].values;
    std::copy(init.begin(), init.end(), out[comp].slice(0).begin());
  }

  std::array<StepSolver, 3> solvers{StepSolver(assemble_transport(g, params.c, params.q[0])),
                                    StepSolver(assemble_transport(g, params.c, params.q[1])),
                                    StepSolver(assemble_transport(g, params.c, params.q[2]))};
  const Vec beta = to_vec(params.beta.values);
  const Vec gamma = to_vec(params.gamma.values);
  const Vec zero = Vec::Zero(n);

  ForwardReport local;
  auto check = [&](double rel, int k, const char* name) {
    local.max_relative_residual = std::max(local.max_relative_residual, rel);
    if (!(rel <= kResidualTarget)) {
      std::ostringstream msg;
      msg << "forward: linear solve for " << name << " failed at step " << k
          << " (relative residual " << rel << ")";
      throw NumericalError(msg.str());
    }
  };

  for (int k = 1; k <= g.nt; ++k) {
    const double t = g.t(k);
    std::array<Vec, 3> prev, forcing;
    for (int comp = 0; comp < 3; ++comp) {
      prev[comp] = to_vec(out[comp].slice(k - 1));
      forcing[comp] = Vec::Zero(n);
      add_flux_terms(g, params.c, params.q[comp], params.flux[comp], k, forcing[comp]);
      if (params.source) {
        for (int j = 0; j <= g.ny; ++j)
          for (int i = 0; i <= g.nx; ++i)
            forcing[comp][static_cast<Eigen::Index>(g.spatial_index(j, i))] +=
                params.source(comp, g.x(i), g.y(j), t);
      }
    }

    Vec S = prev[0], I = prev[1], R = prev[2];
    for (int sweep = 0; sweep < params.picard_iterations; ++sweep) {
      // Partner fields: previous level on the first sweep, latest iterate after.
      const Vec S_lag = S, I_lag = I;
      Vec S_new, I_new, R_new;
      check(solvers[0].solve(beta.cwiseProduct(I_lag), forcing[0], prev[0], S_new, true), k, "rho_S");
      check(solvers[1].solve(-beta.cwiseProduct(S_lag), forcing[1], prev[1], I_new, true), k, "rho_I");
      const Vec forcing_r = forcing[2] + gamma.cwiseProduct(I_lag);
      check(solvers[2].solve(zero, forcing_r, prev[2], R_new, k == 1 && sweep == 0), k, "rho_R");
      S = std::move(S_new);
      I = std::move(I_new);
      R = std::move(R_new);
    }
    std::copy(S.data(), S.data() + n, out.rho_S.slice(k).begin());
    std::copy(I.data(), I.data() + n, out.rho_I.slice(k).begin());
    std::copy(R.data(), R.data() + n, out.rho_R.slice(k).begin());
  }

  for (int comp = 0; comp < 3; ++comp) {
    const auto& v = out[comp].values;
    if (!out[comp].all_finite()) throw NumericalError("forward: non-finite population values");
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
      local.min_value = std::min(local.min_value, v[idx]);
      if (v[idx] < kNegativeThreshold) {
        if (local.negative_count == 0) {
          std::ostringstream msg;
          const std::size_t k = idx / ns, s = idx % ns;
          msg << "negative population in component " << comp << " at (k=" << k
              << ", j=" << s / g.nodes_x() << ", i=" << s % g.nodes_x() << "): " << v[idx];
          local.warnings.push_back(msg.str());
        }
        ++local.negative_count;
      }
    }
  }
  if (report) *report = std::move(local);
  return out;
}

ScalarField restrict_field(const ScalarField& f, const Grid& coarse) {
  const Grid& fine = f.grid;
  if (!grid_nests(coarse, fine)) throw std::invalid_argument("restrict: grids do not nest");
  const int sx = fine.nx / coarse.nx, sy = fine.ny / coarse.ny, st = fine.nt / coarse.nt;
  ScalarField out(coarse);
  for (int k = 0; k <= coarse.nt; ++k)
    for (int j = 0; j <= coarse.ny; ++j)
      for (int i = 0; i <= coarse.nx; ++i) out(k, j, i) = f(k * st, j * sy, i * sx);
  return out;
}

SpatialField restrict_field(const SpatialField& f, const Grid& coarse) {
  const Grid& fine = f.grid;
  if (!grid_nests(coarse, fine)) throw std::invalid_argument("restrict: grids do not nest");
  const int sx = fine.nx / coarse.nx, sy = fine.ny / coarse.ny;
  SpatialField out(coarse);
  for (int j = 0; j <= coarse.ny; ++j)
    for (int i = 0; i <= coarse.nx; ++i) out(j, i) = f(j * sy, i * sx);
  return out;
}

BoundaryTrace restrict_trace(const BoundaryTrace& b, const Grid& fine, const Grid& coarse) {
  if (!grid_nests(coarse, fine)) throw std::invalid_argument("restrict: grids do not nest");
  const int sx = fine.nx / coarse.nx, sy = fine.ny / coarse.ny, st = fine.nt / coarse.nt;
  BoundaryTrace out(coarse);
  for (int k = 0; k <= coarse.nt; ++k) {
    for (int j = 0; j <= coarse.ny; ++j) {
      const auto src = BoundaryTrace::side_index(fine, k * st, j * sy, true);
      const auto dst = BoundaryTrace::side_index(coarse, k, j, true);
      out.left[dst] = b.left[src];
      out.right[dst] = b.right[src];
    }
    for (int i = 0; i <= coarse.nx; ++i) {
      const auto src = BoundaryTrace::side_index(fine, k * st, i * sx, false);
      const auto dst = BoundaryTrace::side_index(coarse, k, i, false);
      out.bottom[dst] = b.bottom[src];
      out.top[dst] = b.top[src];
    }
  }
  return out;
}

RawObservations sample_observations(const SirFields& fields,
                                    const std::array<BoundaryTrace, 3>& flux,
                                    const Grid& obs_grid) {
  const Grid& fine = fields.grid();
  if (!grid_nests(obs_grid, fine))
    throw std::invalid_argument("sample_observations: observation grid does not nest in the solution grid");
  RawObservations obs;
  obs.grid = obs_grid;
  const int m = obs_grid.snapshot_index();
  for (int comp = 0; comp < 3; ++comp) {
    const ScalarField coarse = restrict_field(fields[comp], obs_grid);
    obs.p[comp] = extract_slice(coarse, m);
    auto& f = obs.f[comp];
    f.resize(obs_grid.nodes_t() * obs_grid.nodes_y());
    for (int k = 0; k <= obs_grid.nt; ++k)
      for (int j = 0; j <= obs_grid.ny; ++j)
        f[BoundaryTrace::side_index(obs_grid, k, j, true)] = coarse(k, j, obs_grid.nx);
    obs.g[comp] = restrict_trace(flux[comp], fine, obs_grid);
  }
  return obs;
}

double spatial_mass(const ScalarField& f, int k) {
  const auto w = spatial_quadrature_weights(f.grid);
  const auto s = f.slice(k);
  double m = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) m += w[n] * s[n];
  return m;
}

}  // namespace sirinv
