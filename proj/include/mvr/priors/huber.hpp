#pragma once

#include "mvr/core.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace mvr {

// Huber smoothing of |a|: a^2 / (2 mu) inside (-mu, mu), |a| - mu/2 outside.
// The linear branch is shifted by -mu/2 so the two pieces meet continuously.

inline void check_mu(double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("huber: mu must be > 0");
}

inline double huber_scalar(double a, double mu) {
  const double abs_a = std::abs(a);
  return abs_a < mu ? a * a / (2.0 * mu) : abs_a - 0.5 * mu;
}

inline double huber_scalar_grad(double a, double mu) {
  if (std::abs(a) < mu) return a / mu;
  return a > 0.0 ? 1.0 : -1.0;
}

inline double huber_value(ConstVecRef alpha, double mu) {
  check_mu(mu);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) sum += huber_scalar(alpha[i], mu);
  return sum;
}

inline Vec huber_grad(ConstVecRef alpha, double mu) {
  check_mu(mu);
  Vec g(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) g[i] = huber_scalar_grad(alpha[i], mu);
  return g;
}

/// argmin_a lambda h_mu(a) + (a - z)^2 / 2
inline double huber_prox_scalar(double z, double lambda, double mu) {
  if (std::abs(z) <= mu + lambda) return z / (1.0 + lambda / mu);
  return z > 0.0 ? z - lambda : z + lambda;
}

inline Vec huber_prox(ConstVecRef z, double lambda, double mu) {
  check_mu(mu);
  if (lambda < 0.0) throw std::invalid_argument("huber_prox: lambda must be >= 0");
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = huber_prox_scalar(z[i], lambda, mu);
  return out;
}

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

/// Exact minimiser of
///     w |a| + s h_mu(a - c) + (a - z)^2 / 2,    w, s >= 0,
/// i.e. the prox of an l1 prior plus a Huber cost-to-move centred at c.
///
/// The derivative is piecewise affine and nondecreasing with kinks at 0 and
/// c -/+ mu, so the root is found piece by piece.
inline double l1_huber_prox_scalar(double z, double w, double s, double c, double mu) {
  // Right and left derivatives of the objective at a.
  auto slope_const = [&](double a, double sign_a) {
    // Returns (slope, intercept) of the derivative on the piece containing a,
    // using sign_a for the l1 part.
    double slope = 1.0;
    double intercept = -z + w * sign_a;
    const double t = a - c;
    if (t <= -mu) {
      intercept -= s;
    } else if (t >= mu) {
      intercept += s;
    } else {
      slope += s / mu;
      intercept -= s * c / mu;
    }
    return std::pair<double, double>(slope, intercept);
  };
  auto deriv = [&](double a, double sign_a) {
    const double hp = std::abs(a - c) < mu ? (a - c) / mu : (a - c > 0.0 ? 1.0 : -1.0);
    return a - z + w * sign_a + s * hp;
  };

  std::array<double, 3> knots = {0.0, c - mu, c + mu};
  std::sort(knots.begin(), knots.end());

  // A knot is the minimiser when 0 lies in its subdifferential.
  for (double p : knots) {
    const double left_sign = p > 0.0 ? 1.0 : -1.0;
    const double right_sign = p < 0.0 ? -1.0 : 1.0;
    const double d_left = p == 0.0 ? deriv(p, -1.0) : deriv(p, left_sign);
    const double d_right = p == 0.0 ? deriv(p, 1.0) : deriv(p, right_sign);
    if (d_left <= 0.0 && d_right >= 0.0) return p;
  }
  // Otherwise the root lies strictly inside one of the four open pieces.
  const double inf = std::numeric_limits<double>::infinity();
  const std::array<double, 5> edges = {-inf, knots[0], knots[1], knots[2], inf};
  for (int piece = 0; piece < 4; ++piece) {
    const double lo = edges[piece];
    const double hi = edges[piece + 1];
    if (!(lo < hi)) continue;
    double probe;
    if (std::isinf(lo)) {
      probe = hi - 1.0;
    } else if (std::isinf(hi)) {
      probe = lo + 1.0;
    } else {
      probe = 0.5 * (lo + hi);
    }
    const double sign_a = probe > 0.0 ? 1.0 : (probe < 0.0 ? -1.0 : 0.0);
    const auto [slope, intercept] = slope_const(probe, sign_a);
    const double root = -intercept / slope;
    if (root > lo && root < hi) return root;
  }
  // Rounding can push the root onto a knot; fall back to the nearest knot.
  double best = knots[0];
  double best_abs = inf;
  for (double p : knots) {
    const double d = std::abs(deriv(p, p >= 0.0 ? 1.0 : -1.0));
    if (d < best_abs) {
      best_abs = d;
      best = p;
    }
  }
  return best;
}

}  // namespace mvr
