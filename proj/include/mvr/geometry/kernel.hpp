#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvr {

// Keys cubic convolution kernel (a = -1/2). Interpolating: phi(0) = 1 and
// phi(k) = 0 at every other integer. C^1 everywhere, support (-2, 2).
inline double keys_kernel(double u) {
  const double a = std::abs(u);
  if (a < 1.0) return (1.5 * a - 2.5) * a * a + 1.0;
  if (a < 2.0) return ((-0.5 * a + 2.5) * a - 4.0) * a + 2.0;
  return 0.0;
}

inline double keys_kernel_derivative(double u) {
  const double a = std::abs(u);
  const double s = u < 0.0 ? -1.0 : 1.0;
  if (a < 1.0) return s * (4.5 * a - 5.0) * a;
  if (a < 2.0) return s * ((-1.5 * a + 5.0) * a - 4.0);
  return 0.0;
}

// Cubic B-spline. C^2 but not interpolating: sampling it on the lattice gives
// (1/6, 2/3, 1/6), so a warp built on it smooths even at identity parameters.
inline double bspline3_kernel(double u) {
  const double a = std::abs(u);
  if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
  if (a < 2.0) {
    const double t = 2.0 - a;
    return t * t * t / 6.0;
  }
  return 0.0;
}

inline double bspline3_kernel_derivative(double u) {
  const double a = std::abs(u);
  const double s = u < 0.0 ? -1.0 : 1.0;
  if (a < 1.0) return s * (-2.0 * a + 1.5 * a * a);
  if (a < 2.0) {
    const double t = 2.0 - a;
    return -s * 0.5 * t * t;
  }
  return 0.0;
}

enum class KernelKind { Keys, CubicBSpline };

inline double kernel_value(KernelKind kind, double u) {
  return kind == KernelKind::Keys ? keys_kernel(u) : bspline3_kernel(u);
}

inline double kernel_derivative(KernelKind kind, double u) {
  return kind == KernelKind::Keys ? keys_kernel_derivative(u) : bspline3_kernel_derivative(u);
}

inline KernelKind parse_kernel(const std::string& name) {
  if (name == "keys") return KernelKind::Keys;
  if (name == "bspline" || name == "bspline3") return KernelKind::CubicBSpline;
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

}  // namespace mvr
