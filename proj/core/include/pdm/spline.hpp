#pragma once

#include <span>
#include <vector>

namespace pdm {

/// Natural cubic spline (zero second derivative at both ends). Knot x
/// values must be strictly increasing. Evaluation outside the knot range
/// returns the boundary knot value.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::span<const double> x, std::span<const double> y);

  double operator()(double at) const;

  std::span<const double> second_derivatives() const { return m_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

/// Piecewise-linear interpolation with the same clamping rule.
double interpolate_linear(std::span<const double> x, std::span<const double> y, double at);

}  // namespace pdm
