#include "sirinv/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace sirinv {

CubicSpline::CubicSpline(std::span<const double> x, std::span<const double> y,
                         const SplineEnds& ends)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()), m_(x.size(), 0.0) {
  const std::size_t n = x_.size();
  if (n < 2) throw std::invalid_argument("spline: need at least two knots");
  if (y_.size() != n) throw std::invalid_argument("spline: x and y sizes differ");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1]))
      throw std::invalid_argument("spline: abscissae must be strictly increasing");

  // Tridiagonal system for the knot second derivatives (Thomas algorithm).
  std::vector<double> lower(n, 0.0), diag(n, 1.0), upper(n, 0.0), rhs(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
    lower[i] = h0;
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  if (ends.left_slope) {
    const double h = x_[1] - x_[0];
    diag[0] = 2.0 * h;
    upper[0] = h;
    rhs[0] = 6.0 * ((y_[1] - y_[0]) / h - *ends.left_slope);
  }
  if (ends.right_slope) {
    const double h = x_[n - 1] - x_[n - 2];
    lower[n - 1] = h;
    diag[n - 1] = 2.0 * h;
    rhs[n - 1] = 6.0 * (*ends.right_slope - (y_[n - 1] - y_[n - 2]) / h);
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
}

std::size_t CubicSpline::interval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double CubicSpline::value(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
  return (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) * h * m_[i] / 6.0 +
         (3.0 * b * b - 1.0) * h * m_[i + 1] / 6.0;
}

double CubicSpline::second_derivative(double x) const {
  const std::size_t i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
  return a * m_[i] + b * m_[i + 1];
}

double CubicSpline::knot_derivative(std::size_t i) const {
  const std::size_t n = x_.size();
  if (i + 1 < n) {
    const double h = x_[i + 1] - x_[i];
    return (y_[i + 1] - y_[i]) / h - h * (2.0 * m_[i] + m_[i + 1]) / 6.0;
  }
  const double h = x_[n - 1] - x_[n - 2];
  return (y_[n - 1] - y_[n - 2]) / h + h * (m_[n - 2] + 2.0 * m_[n - 1]) / 6.0;
}

SplineDerivatives spline_derivatives_uniform(std::span<const double> samples, double h,
                                             const SplineEnds& ends) {
  if (samples.size() < 4) throw std::invalid_argument("spline: need at least 4 samples");
  if (!(h > 0.0)) throw std::invalid_argument("spline: sample spacing must be positive");
  std::vector<double> x(samples.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) * h;
  const CubicSpline s(x, samples, ends);
  SplineDerivatives d{std::vector<double>(x.size()), std::vector<double>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    d.first[i] = s.knot_derivative(i);
    d.second[i] = s.knot_second_derivative(i);
  }
  return d;
}

}  // namespace sirinv
