#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "sirinv/grid.hpp"

namespace sirinv {

/// Coefficients and data of the spatial SIR initial-boundary-value problem.
///
/// Component order everywhere is (S, I, R). Neumann fluxes are outward normal
/// derivatives sampled on the solver grid.
struct SirParams {
  double c = 0.0;  // viscosity eta^2 / 2, shared by the three equations
  std::array<VelocityField, 3> q;
  SpatialField beta;
  SpatialField gamma;
  std::array<BoundaryTrace, 3> flux;
  std::array<SpatialField, 3> initial;

  /// Optional volumetric source f(component, x, y, t) added to the right-hand
  /// side of each equation; used for manufactured-solution studies.
  std::function<double(int, double, double, double)> source;

  /// Number of lagged-coefficient sweeps per time step (1 = pure lagging).
  int picard_iterations = 1;

  /// Zero velocities, rates, fluxes and initial data on `g`.
  static SirParams zeros(const Grid& g, double c);
};

struct SirFields {
  ScalarField rho_S;
  ScalarField rho_I;
  ScalarField rho_R;

  const ScalarField& operator[](int comp) const;
  ScalarField& operator[](int comp);
  const Grid& grid() const { return rho_S.grid; }
};

struct ForwardReport {
  double max_relative_residual = 0.0;
  std::size_t negative_count = 0;  // nodes with value < -1e-8
  double min_value = 0.0;
  std::vector<std::string> warnings;
};

/// Backward Euler with lagged partner fields in the bilinear coupling.
/// Diffusion and advection use ghost-node reflection of the Neumann data, so
/// the zero-flux diffusion operator conserves trapezoid-weighted mass.
/// Throws NumericalError when a linear solve misses the 1e-10 residual target.
SirFields solve_forward(const SirParams& params, const Grid& grid, ForwardReport* report = nullptr);

/// Pointwise data of the inverse problem on an observation grid.
struct RawObservations {
  Grid grid;
  std::array<SpatialField, 3> p;        // snapshot at t = T/2
  std::array<std::vector<double>, 3> f;  // Dirichlet trace at x = b, (k, j) -> k*(ny+1) + j
  std::array<BoundaryTrace, 3> g;        // Neumann fluxes on all four sides
};

/// Restricts a solution to the nested observation grid by nodal subsampling.
/// Throws std::invalid_argument when the grids do not nest.
RawObservations sample_observations(const SirFields& fields,
                                    const std::array<BoundaryTrace, 3>& flux,
                                    const Grid& obs_grid);

ScalarField restrict_field(const ScalarField& f, const Grid& coarse);
SpatialField restrict_field(const SpatialField& f, const Grid& coarse);
BoundaryTrace restrict_trace(const BoundaryTrace& b, const Grid& fine, const Grid& coarse);

/// Trapezoid-weighted spatial integral of the slice k.
double spatial_mass(const ScalarField& f, int k);

}  // namespace sirinv
