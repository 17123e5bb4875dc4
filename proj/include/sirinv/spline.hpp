#pragma once

#include <optional>
#include <span>
#include <vector>

namespace sirinv {

/// End slopes for a clamped end; an empty slot gives the natural condition s'' = 0.
struct SplineEnds {
  std::optional<double> left_slope;
  std::optional<double> right_slope;
};

/// Interpolating cubic spline, natural at both ends unless slopes are given.
class CubicSpline {
 public:
  /// Throws std::invalid_argument for fewer than 2 points, mismatched sizes,
  /// or abscissae that are not strictly increasing.
  CubicSpline(std::span<const double> x, std::span<const double> y, const SplineEnds& ends = {});

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;

  /// s' at the i-th knot.
  double knot_derivative(std::size_t i) const;
  /// s'' at the i-th knot (natural end values are exactly zero).
  double knot_second_derivative(std::size_t i) const { return m_[i]; }

  std::size_t size() const { return x_.size(); }

 private:
  std::size_t interval(double x) const;

  std::vector<double> x_, y_, m_;  // m_ = second derivatives at knots
};

struct SplineDerivatives {
  std::vector<double> first;
  std::vector<double> second;
};

/// Spline first and second derivatives at uniformly spaced samples.
/// Requires at least 4 samples and h > 0.
SplineDerivatives spline_derivatives_uniform(std::span<const double> samples, double h,
                                             const SplineEnds& ends = {});

}  // namespace sirinv
