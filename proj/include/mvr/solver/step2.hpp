#pragma once

#include "mvr/solver/box_qp.hpp"
#include "mvr/solver/config.hpp"
#include "mvr/solver/problem.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace mvr {

struct FidelityModel {
  Vec grad;           // 2 (A_j J)^T r
  Mat hessian;        // 2 (A_j J)^T (A_j J)
  double value = 0.0; // q_j(theta) = ||r||^2
};

/// q_j(theta) = ||A_j (T(theta) x0 + x_j) - y_j||^2 for the given warp.
inline double view_fidelity(const Problem& problem, int j, const WarpOperator& warp, ConstVecRef x) {
  const Eigen::Index n = problem.pixels();
  Vec img = warp.apply(x.segment(0, n));
  img += x.segment((j + 1) * n, n);
  const auto& op = problem.data.ops[static_cast<std::size_t>(j)];
  return (op.apply(img) - problem.data.y[static_cast<std::size_t>(j)]).squaredNorm();
}

/// Gradient and Gauss-Newton curvature of q_j at the warp's parameters.
inline FidelityModel fidelity_grad_params(const Problem& problem, int j, const WarpOperator& warp, ConstVecRef x) {
  require_size(x.size(), problem.unknowns(), "fidelity_grad_params x");
  const Eigen::Index n = problem.pixels();
  const auto& op = problem.data.ops[static_cast<std::size_t>(j)];
  Vec img = warp.apply(x.segment(0, n));
  img += x.segment((j + 1) * n, n);
  const Vec r = op.apply(img) - problem.data.y[static_cast<std::size_t>(j)];

  const Mat jac = warp.jacobian(x.segment(0, n));
  Mat aj(op.rows(), jac.cols());
  for (Eigen::Index i = 0; i < jac.cols(); ++i) {
    auto col = aj.col(i);
    op.apply(jac.col(i), col);
  }
  FidelityModel fm;
  fm.value = r.squaredNorm();
  fm.grad = 2.0 * aj.transpose() * r;
  fm.hessian = 2.0 * aj.transpose() * aj;
  fm.hessian = 0.5 * (fm.hessian + fm.hessian.transpose()).eval();
  return fm;
}

struct Step2Result {
  TransformParams params;
  WarpOperator warp;   // warp at the returned parameters
  int i = 0;           // accepted backtracking index
  bool skipped = false;
  double q_before = 0.0;
  double q_after = 0.0;
};

/// theta_j^{k+1} = theta_j^k + delta with delta minimising
/// <g, delta> + delta^T (H + 2^i gamma I) delta / 2 over the box, for the
/// smallest i >= 1 such that
///   q(theta + delta) <= q(theta) + <g, delta> + delta^T (H + (2^i - 1) gamma I) delta / 2
/// and q(theta + delta) + gamma/2 ||delta||^2 <= q(theta).
inline Step2Result step2_param_update(const Problem& problem, int j, const WarpOperator& warp, ConstVecRef x,
                                      double gamma_theta, const ParamBounds& bounds, int backtrack_cap = 60,
                                      double qp_tol = 1e-12) {
  const TransformParams& cur = warp.params();
  if (!bounds.contains(cur.theta)) throw std::domain_error("step2: current parameters outside their box");
  const FidelityModel fm = fidelity_grad_params(problem, j, warp, x);
  const int p = static_cast<int>(fm.grad.size());

  Step2Result res{cur, warp, 1, false, fm.value, fm.value};
  if (fm.grad.lpNorm<Eigen::Infinity>() == 0.0) return res;

  const Vec lo = bounds.lower - cur.theta;
  const Vec hi = bounds.upper - cur.theta;
  const Mat eye = Mat::Identity(p, p);
  for (int i = 1; i <= backtrack_cap; ++i) {
    const double scale = std::ldexp(1.0, i) * gamma_theta;
    const BoxQpResult qp = solve_box_qp(fm.hessian + scale * eye, fm.grad, lo, hi, qp_tol);
    const Vec& delta = qp.x;
    if (delta.lpNorm<Eigen::Infinity>() == 0.0) {
      res.i = i;
      return res;
    }
    TransformParams cand(cur.model, bounds.project(cur.theta + delta));
    const Vec step = cand.theta - cur.theta;
    WarpOperator cand_warp(problem.grid, cand, warp.kernel());
    const double q_new = view_fidelity(problem, j, cand_warp, x);
    const double model = fm.value + fm.grad.dot(step) +
                         0.5 * (step.dot(fm.hessian * step) + (scale - gamma_theta) * step.squaredNorm());
    const bool majorised = q_new <= model;
    const bool decrease = q_new + 0.5 * gamma_theta * step.squaredNorm() <= fm.value;
    if (majorised && decrease && std::isfinite(q_new)) {
      res.params = std::move(cand);
      res.warp = std::move(cand_warp);
      res.i = i;
      res.q_after = q_new;
      return res;
    }
  }
  res.i = backtrack_cap + 1;
  res.skipped = true;
  return res;
}

/// Step 2 over all views. Views are independent; with threads > 1 they are
/// split across workers, each writing only its own slots, so the result is
/// identical to the sequential loop.
inline std::vector<Step2Result> step2_all_views(const Problem& problem, const StackedOperator& op, ConstVecRef x,
                                                const SolverConfig& cfg) {
  const int l = op.views();
  std::vector<Step2Result> out(static_cast<std::size_t>(l));
  auto work = [&](int j) {
    out[static_cast<std::size_t>(j)] = step2_param_update(problem, j, op.warp(j), x, cfg.gamma_theta,
                                                          cfg.bounds[static_cast<std::size_t>(j)], cfg.backtrack_cap,
                                                          cfg.qp_tol);
  };
  const int workers = std::clamp(cfg.threads, 1, l);
  if (workers == 1) {
    for (int j = 0; j < l; ++j) work(j);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int j = w; j < l; j += workers) work(j);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace mvr
