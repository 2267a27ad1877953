#pragma once

#include "mvr/core.hpp"

namespace mvr {

// Isotropic total variation with forward differences. Samples beyond the last
// column / row are taken as zero, so the difference operator is injective and
// a constant image c != 0 has TV = (2 (side - 1) + sqrt(2)) |c|.

/// Forward differences: grad[0..n) horizontal, grad[n..2n) vertical.
inline void tv_gradient(ConstVecRef x, int side, VecRef grad) {
  const Eigen::Index n = static_cast<Eigen::Index>(side) * side;
  require_size(x.size(), n, "tv_gradient input");
  require_size(grad.size(), 2 * n, "tv_gradient output");
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const Eigen::Index k = static_cast<Eigen::Index>(r) * side + c;
      const double right = c + 1 < side ? x[k + 1] : 0.0;
      const double down = r + 1 < side ? x[k + side] : 0.0;
      grad[k] = right - x[k];
      grad[n + k] = down - x[k];
    }
  }
}

/// Adjoint of tv_gradient (a negative divergence).
inline void tv_gradient_adjoint(ConstVecRef p, int side, VecRef out) {
  const Eigen::Index n = static_cast<Eigen::Index>(side) * side;
  require_size(p.size(), 2 * n, "tv_gradient_adjoint input");
  require_size(out.size(), n, "tv_gradient_adjoint output");
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const Eigen::Index k = static_cast<Eigen::Index>(r) * side + c;
      double v = -p[k] - p[n + k];
      if (c > 0) v += p[k - 1];
      if (r > 0) v += p[n + k - side];
      out[k] = v;
    }
  }
}

inline double tv_value(ConstVecRef x, int side) {
  const Eigen::Index n = static_cast<Eigen::Index>(side) * side;
  Vec g(2 * n);
  tv_gradient(x, side, g);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) sum += std::hypot(g[k], g[n + k]);
  return sum;
}

/// Project each (p1, p2) pair onto the ball of radius `radius`.
inline void project_pointwise_ball(VecRef p, double radius) {
  const Eigen::Index n = p.size() / 2;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double norm = std::hypot(p[k], p[n + k]);
    if (norm > radius) {
      const double s = radius / norm;
      p[k] *= s;
      p[n + k] *= s;
    }
  }
}

struct TvProxResult {
  Vec x;
  Vec dual;  // pointwise unit-ball dual field, reusable as a warm start
  double primal = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

/// argmin_x (1/2)||x - z||^2 + lambda TV(x) by fast gradient projection on
/// the dual; x = z - lambda K^T p. Stops once the duality gap
/// lambda (TV(x) - <Kx, p>) is at most gap_tol (1 + primal).
inline TvProxResult tv_prox(ConstVecRef z, int side, double lambda, int max_iterations = 200,
                            double gap_tol = 1e-8, const Vec* warm_dual = nullptr) {
  const Eigen::Index n = static_cast<Eigen::Index>(side) * side;
  require_size(z.size(), n, "tv_prox input");
  if (lambda < 0.0) throw std::invalid_argument("tv_prox: lambda must be >= 0");
  TvProxResult res;
  res.dual = Vec::Zero(2 * n);
  if (lambda == 0.0) {
    res.x = z;
    return res;
  }
  if (warm_dual != nullptr && warm_dual->size() == 2 * n) res.dual = *warm_dual;

  Vec p = res.dual;
  Vec q = p;  // extrapolated point
  Vec p_prev = p;
  Vec x(n);
  Vec grad(2 * n);
  Vec kt(n);
  double t = 1.0;
  const double step = 1.0 / (8.0 * lambda);

  auto evaluate = [&](const Vec& dual) {
    tv_gradient_adjoint(dual, side, kt);
    x = z - lambda * kt;
    tv_gradient(x, side, grad);
    double tv = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) tv += std::hypot(grad[k], grad[n + k]);
    const double primal = 0.5 * (x - z).squaredNorm() + lambda * tv;
    const double gap = lambda * (tv - grad.dot(dual));
    return std::pair<double, double>(primal, gap);
  };

  auto [primal, gap] = evaluate(p);
  int it = 0;
  while (it < max_iterations && gap > gap_tol * (1.0 + primal)) {
    ++it;
    tv_gradient_adjoint(q, side, kt);
    x = z - lambda * kt;
    tv_gradient(x, side, grad);
    p_prev = p;
    p = q + step * grad;
    project_pointwise_ball(p, 1.0);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    q = p + ((t - 1.0) / t_next) * (p - p_prev);
    t = t_next;
    std::tie(primal, gap) = evaluate(p);
  }
  res.x = x;
  res.dual = p;
  res.primal = primal;
  res.gap = gap;
  res.iterations = it;
  return res;
}

}  // namespace mvr
