#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace lyapkit {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  std::size_t max_intervals = std::size_t{1} << 20;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t intervals = 0;
  bool converged = true;
};

/// Adaptive Simpson on [a, b] (a > b allowed, sign flips).
///
/// An endpoint where the integrand is not finite is treated as an integrable
/// singularity: the piece next to it is mapped through s = a + (b - a) t^2,
/// which removes |s - a|^alpha singularities with alpha > -1/2 and weakens
/// the rest. Interior points listed in `breakpoints` split the range and are
/// handled one-sided in the same way.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  const QuadratureOptions& opts = {},
                                  std::span<const double> breakpoints = {});

/// Same as adaptive_simpson but throws QuadratureError on non-convergence.
double integrate(const std::function<double(double)>& f, double a, double b, const QuadratureOptions& opts = {},
                 std::span<const double> breakpoints = {});

/// Composite Simpson over equally spaced samples; an odd number of panels
/// closes with Simpson's 3/8 rule on the last three panels. Two samples fall
/// back to the trapezoid rule.
double composite_simpson(std::span<const double> values, double h);

}  // namespace lyapkit
