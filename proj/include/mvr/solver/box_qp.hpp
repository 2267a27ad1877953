#pragma once

#include "mvr/core.hpp"

#include <vector>

namespace mvr {

struct BoxQpResult {
  Vec x;
  double residual = 0.0;  // ||x - P(x - grad)||_inf
  int iterations = 0;
  bool converged = false;
};

/// min <g, x> + x^T Q x / 2  subject to  lower <= x <= upper, Q symmetric
/// positive definite and small (p <= 8 here).
///
/// Projected Newton iteration: variables at a bound whose gradient pushes
/// outward are frozen, a Newton step is taken on the rest, and the step is
/// projected back with an Armijo search. For a strictly convex QP the active
/// set settles after finitely many steps and the next Newton step is exact.
/// Termination is judged on the projected-gradient fixed-point residual.
inline BoxQpResult solve_box_qp(const Mat& q, const Vec& g, const Vec& lower, const Vec& upper, double tol = 1e-12,
                                int max_iterations = 200) {
  const Eigen::Index p = g.size();
  require_size(q.rows(), p, "solve_box_qp Q rows");
  require_size(q.cols(), p, "solve_box_qp Q cols");
  require_size(lower.size(), p, "solve_box_qp lower");
  require_size(upper.size(), p, "solve_box_qp upper");

  auto project = [&](const Vec& v) -> Vec { return v.cwiseMax(lower).cwiseMin(upper); };
  auto objective = [&](const Vec& v) { return g.dot(v) + 0.5 * v.dot(q * v); };
  const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());

  BoxQpResult res;
  res.x = project(Vec::Zero(p));
  for (int it = 0; it < max_iterations; ++it) {
    const Vec grad = g + q * res.x;
    res.residual = (res.x - project(res.x - grad)).lpNorm<Eigen::Infinity>();
    res.iterations = it;
    if (res.residual <= tol * scale) {
      res.converged = true;
      return res;
    }
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < p; ++i) {
      const bool at_lower = res.x[i] <= lower[i] && grad[i] > 0.0;
      const bool at_upper = res.x[i] >= upper[i] && grad[i] < 0.0;
      if (!at_lower && !at_upper) free.push_back(i);
    }
    Vec dir = Vec::Zero(p);
    if (!free.empty()) {
      const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
      Mat qff(nf, nf);
      Vec gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        gf[a] = grad[free[a]];
        for (Eigen::Index b = 0; b < nf; ++b) qff(a, b) = q(free[a], free[b]);
      }
      const Vec df = qff.ldlt().solve(-gf);
      for (Eigen::Index a = 0; a < nf; ++a) dir[free[a]] = df[a];
    }
    const double f0 = objective(res.x);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec cand = project(res.x + step * dir);
      const double decrease = grad.dot(cand - res.x);
      if (objective(cand) <= f0 + 1e-4 * decrease) {
        accepted = !(cand == res.x);
        res.x = cand;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Projected gradient step with 1 / lambda_max, always a descent step.
      const double lmax = std::max(q.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff(), 1e-300);
      res.x = project(res.x - grad / lmax);
    }
  }
  const Vec grad = g + q * res.x;
  res.residual = (res.x - project(res.x - grad)).lpNorm<Eigen::Infinity>();
  res.iterations = max_iterations;
  res.converged = res.residual <= tol * scale;
  return res;
}

}  // namespace mvr
