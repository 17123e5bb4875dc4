#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "sirinv/grid.hpp"
#include "sirinv/observation.hpp"

namespace sirinv {

inline constexpr int kWComponents = 6;

/// The transformed unknown W = (v1, v2, v3, w1, w2, w3): first and second
/// time derivatives of (S, I, R). Stored component-major, each component in
/// the grid's time-major node order.
struct WField {
  Grid grid;
  std::vector<double> values;

  WField() = default;
  explicit WField(const Grid& g, double fill = 0.0)
      : grid(g), values(g.size() * kWComponents, fill) {}

  std::span<double> comp(int c) {
    return {values.data() + static_cast<std::size_t>(c) * grid.size(), grid.size()};
  }
  std::span<const double> comp(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * grid.size(), grid.size()};
  }
  double& operator()(int c, int k, int j, int i) {
    return values[static_cast<std::size_t>(c) * grid.size() + grid.index(k, j, i)];
  }
  double operator()(int c, int k, int j, int i) const {
    return values[static_cast<std::size_t>(c) * grid.size() + grid.index(k, j, i)];
  }

  ScalarField component_field(int c) const;
  void set_component(int c, const ScalarField& f);
  bool all_finite() const;
};

/// Differences: undivided differences (stencil times h^order), so every term
/// has the units of W^2. Derivatives: difference quotients.
enum class RegularizationNorm { Differences, Derivatives };

RegularizationNorm parse_regularization_norm(const std::string& s);
std::string to_string(RegularizationNorm norm);

struct CarlemanParams {
  double lambda = 3.0;
  double xi = 0.01;
  double b = 1.1;  // right edge of the domain, sets the balancing factor
  /// When set, xi/2 must lie in [exp(-lambda T^2/4), 1/2).
  bool theory_mode = false;
  RegularizationNorm norm = RegularizationNorm::Differences;
};

/// Throws std::invalid_argument for lambda < 0, xi < 0, the exp-overflow guard
/// (lambda b^2 > 300), or a theory-mode xi outside its admissible window.
void validate(const CarlemanParams& params, const Grid& grid);

/// True when xi lies in the window that couples it to lambda for convexity.
bool xi_in_theory_window(const CarlemanParams& params, double T);

struct CarlemanWeight {
  ScalarField phi;       // exp(2 lambda (x^2 - (t - T/2)^2))
  ScalarField balanced;  // exp(-2 lambda b^2) * phi, at most 1
};

CarlemanWeight cwf_eval(const CarlemanParams& params, const Grid& grid);

/// Nonlinear part P(W) of the transformed system, so that
/// L(W) = W_t - c Lap W - P(W).
std::array<ScalarField, 6> assemble_P(const WField& W, const ObservationSet& obs);

struct FunctionalValue {
  double total = 0.0;
  double fidelity = 0.0;        // balanced, weighted residual term
  double regularization = 0.0;  // xi * ||W||^2
};

/// The discrete Carleman-weighted Tikhonov functional and its exact gradient.
///
/// Regularization uses a discrete H^2-type norm: squared values, first
/// differences in x, y, t and second differences xx, xy, yy, each summed with
/// trapezoid weights (see RegularizationNorm for the scaling).
class Functional {
 public:
  Functional(const ObservationSet& obs, const CarlemanParams& params);

  const Grid& grid() const { return grid_; }
  const CarlemanParams& params() const { return params_; }
  const ObservationSet& observations() const { return obs_; }

  /// L(W), one field per component.
  std::array<ScalarField, 6> residual(const WField& W) const;

  FunctionalValue evaluate(const WField& W) const;
  /// Fills `grad` (size 6*N) with dJ/dW at every node and returns J.
  FunctionalValue evaluate(const WField& W, std::span<double> grad) const;

  /// sum_c sum_n w_n [W^2 + W_x^2 + W_y^2 + W_t^2 + W_xx^2 + 2 W_xy^2 + W_yy^2],
  /// with each derivative an undivided difference in the default norm.
  double squared_norm(const WField& W) const;

 private:
  void linear_part(std::span<const double> u, int comp, std::span<double> out) const;
  void linear_part_transpose(std::span<const double> a, int comp, std::span<double> out) const;
  double regularization(const WField& W, std::span<double> grad, double scale) const;

  ObservationSet obs_;
  CarlemanParams params_;
  Grid grid_;
  GridOperators ops_;
  FieldShape shape_;
  std::vector<double> weights_;
  std::vector<double> fidelity_weights_;  // quadrature * balanced CWF
};

double functional_J(const WField& W, const CarlemanParams& params, const ObservationSet& obs);
WField gradient_J(const WField& W, const CarlemanParams& params, const ObservationSet& obs);

/// W* = (d/dt rho, d^2/dt^2 rho) with the grid's time-difference stencil.
WField w_from_populations(const ScalarField& rho_S, const ScalarField& rho_I,
                          const ScalarField& rho_R);

/// Quadrature-weighted L2(Q_T) norm over all six components.
double weighted_l2(const std::array<ScalarField, 6>& fields);

}  // namespace sirinv
