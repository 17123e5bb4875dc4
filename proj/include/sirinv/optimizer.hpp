#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sirinv/convexification.hpp"

namespace sirinv {

/// Affine boundary relations for every W component.
///
/// Free nodes are i in [1, nx-2], j in [1, ny-1], all k. The remaining nodes are
/// eliminated in a fixed order: y-sides first (bottom j=0, top j=ny for
/// i in [1, nx-2]) by one-sided second-order Neumann relations, then x-sides for
/// all j (left i=0 by the Neumann relation, right i=nx pinned to F and i=nx-1 by
/// the Neumann relation at x=b). Corners therefore belong to the x-relations.
class ConstraintSet {
 public:
  ConstraintSet() = default;
  explicit ConstraintSet(const ObservationSet& obs);

  const Grid& grid() const { return grid_; }
  std::size_t free_size() const { return kWComponents * per_component_; }

  std::vector<double> eliminate(const WField& W) const;
  WField expand(std::span<const double> z) const;
  /// Chain rule of expand: maps dJ/dW (all nodes) to dJ/dz (free nodes).
  std::vector<double> expand_transpose(const WField& grad) const;

  /// Largest absolute violation over all relations and components.
  double residual(const WField& W) const;

 private:
  std::size_t free_index(int k, int j, int i) const;
  void apply_relations(WField& W, bool homogeneous) const;

  Grid grid_;
  std::size_t per_component_ = 0;
  std::array<std::vector<double>, 6> F_;          // (k, j) on x = b
  std::array<BoundaryTrace, 6> G_;
};

/// W0 = ((x - a)/(b - a)) F(y, t), then made admissible.
WField initial_guess(const ObservationSet& obs, const ConstraintSet& constraints);

enum class OptimizerMode { GradientDescent, LBFGS };

struct OptimizerConfig {
  double sigma = 1.0;          // initial trial step
  double backtrack = 0.5;
  double armijo = 1e-4;
  double grad_tol = 1e-2;
  int max_iters = 5000;
  OptimizerMode mode = OptimizerMode::LBFGS;
  int lbfgs_memory = 10;
  /// The stopping test uses max|dJ/dz| * gradient_scale. For the functional this
  /// is 1/(hx hy ht), turning nodal derivatives into a density.
  double gradient_scale = 1.0;
  int max_halvings = 50;
};

void validate(const OptimizerConfig& config);
OptimizerMode parse_optimizer_mode(const std::string& s);
std::string to_string(OptimizerMode mode);

struct TraceRow {
  int iter = 0;
  double J = 0.0;
  double fidelity = 0.0;
  double grad_norm = 0.0;  // scaled max norm
  double W_norm = 0.0;
  double step = 0.0;
  double constraint_residual = 0.0;
};

enum class OptimizerStatus { Converged, MaxIterations, LineSearchFailed };
std::string to_string(OptimizerStatus status);

struct EvalResult {
  double value = 0.0;
  double fidelity = 0.0;
  double norm = 0.0;
};

/// Evaluates the objective at z and writes its gradient.
using Objective = std::function<EvalResult(std::span<const double> z, std::span<double> grad)>;
/// Called after each accepted iterate; may fill extra trace fields.
using IterateHook = std::function<void(std::span<const double> z, TraceRow& row)>;

struct OptimizeResult {
  std::vector<double> z;
  std::vector<TraceRow> trace;
  OptimizerStatus status = OptimizerStatus::MaxIterations;
  int iterations = 0;
  double grad_norm = 0.0;
};

/// Armijo-backtracked descent (steepest or L-BFGS direction). Throws
/// NumericalError when the objective is non-finite at the starting point.
OptimizeResult minimize(const Objective& objective, std::vector<double> z0,
                        const OptimizerConfig& config, const IterateHook& hook = {});

struct InversionRun {
  WField W;
  OptimizeResult result;
};

/// Minimizes the functional over admissible W starting from W0.
InversionRun minimize_functional(const Functional& J, const ConstraintSet& constraints,
                                 const WField& W0, const OptimizerConfig& config);

/// 1/(hx hy ht) for the grid.
double volume_gradient_scale(const Grid& g);

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

}  // namespace sirinv
