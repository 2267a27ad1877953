#pragma once

#include "mvr/solver/config.hpp"
#include "mvr/solver/problem.hpp"

#include <cmath>
#include <limits>

namespace mvr {

struct Step1Result {
  Vec x;
  ObjectiveParts parts;    // at x, theta^k
  double move = 0.0;       // h_mu(D^T (x - x^k))
  double subproblem = 0.0; // L + gamma/2 * move
  int iterations = 0;
  bool fallback = false;   // decrease check failed, x^k kept
  Step1Method method = Step1Method::ForwardBackward;
};

/// True when the prior is an l1 norm in the same orthonormal basis as the
/// cost-to-move frame, so prior plus cost-to-move has an exact joint prox.
inline bool has_joint_prox(const Problem& problem) {
  if (problem.prior.kind() != PriorKind::L1Analysis) return false;
  const auto& a = problem.prior.frame().wavelet();
  const auto& b = problem.move_frame.wavelet();
  return a.family() == b.family() && a.levels() == b.levels() && a.side() == b.side();
}

inline Step1Method resolve_step1_method(const Problem& problem, Step1Method requested) {
  if (requested == Step1Method::ForwardBackward && !has_joint_prox(problem)) {
    throw std::invalid_argument("step1: forward-backward needs an l1 prior in the cost-to-move basis");
  }
  if (requested != Step1Method::Auto) return requested;
  return has_joint_prox(problem) ? Step1Method::ForwardBackward : Step1Method::PrimalDual;
}

namespace detail {

/// Shared bookkeeping of the inner solvers: evaluates the step-1 objective
/// Phi(x) = L(x, theta^k) + gamma/2 h_mu(D^T (x - x^k)) and keeps the best
/// point seen, starting from x^k itself.
class Step1Tracker {
 public:
  Step1Tracker(const Problem& problem, const StackedOperator& op, const Vec& xk, double gamma, double kappa, double mu)
      : problem_(problem), op_(op), xk_(xk), gamma_(gamma), kappa_(kappa), mu_(mu) {
    best_.x = xk;
    best_.parts = objective_parts(problem, op, xk, kappa);
    best_.move = 0.0;
    best_.subproblem = best_.parts.total();
    initial_ = best_.subproblem;
  }

  /// Phi at x given its residual A x - y (already computed by the caller).
  double evaluate(const Vec& x, const Vec& residual, double* prior_out = nullptr, double* move_out = nullptr) const {
    const double prior = problem_.prior.value(x);
    const double move = move_cost(problem_.move_frame, x - xk_, mu_);
    if (prior_out) *prior_out = prior;
    if (move_out) *move_out = move;
    return prior + kappa_ * residual.squaredNorm() + 0.5 * gamma_ * move;
  }

  void offer(const Vec& x, double phi) {
    if (phi < best_.subproblem) {
      best_.x = x;
      best_.subproblem = phi;
      dirty_ = true;
    }
  }

  double initial() const { return initial_; }
  double best_value() const { return best_.subproblem; }

  /// Recompute every term at the best point with the same code path as the
  /// outer loop, then apply the decrease check of the step.
  Step1Result finish(int iterations, Step1Method method) {
    Step1Result res = best_;
    res.iterations = iterations;
    res.method = method;
    if (dirty_) {
      res.parts = objective_parts(problem_, op_, res.x, kappa_);
      res.move = move_cost(problem_.move_frame, res.x - xk_, mu_);
      res.subproblem = res.parts.total() + 0.5 * gamma_ * res.move;
      if (!(res.subproblem <= initial_) || !std::isfinite(res.subproblem)) {
        res.x = xk_;
        res.parts = objective_parts(problem_, op_, xk_, kappa_);
        res.move = 0.0;
        res.subproblem = res.parts.total();
        res.fallback = true;
      }
    }
    return res;
  }

 private:
  const Problem& problem_;
  const StackedOperator& op_;
  const Vec& xk_;
  double gamma_, kappa_, mu_;
  Step1Result best_;
  double initial_ = 0.0;
  bool dirty_ = false;
};

/// Relative-change stopping rule with a short patience window.
class InnerStop {
 public:
  InnerStop(double rel_tol, int patience = 3) : tol_(rel_tol), patience_(patience) {}
  bool update(double prev, double cur) {
    if (std::abs(prev - cur) <= tol_ * std::max(1.0, std::abs(cur))) {
      ++quiet_;
    } else {
      quiet_ = 0;
    }
    return quiet_ >= patience_;
  }

 private:
  double tol_;
  int patience_;
  int quiet_ = 0;
};

inline double step1_lipschitz(const StackedOperator& op, double kappa, int power_iterations) {
  // Power iteration approaches the norm from below; the margin keeps the step safe.
  return 2.0 * kappa * op.squared_norm_estimate(power_iterations) * 1.02 + 1e-12;
}

/// Monotone FISTA in the coefficient domain alpha = D^T x (D orthonormal),
/// with the exact prox of w|a| + gamma/2 h_mu(a - c) per coefficient.
inline Step1Result step1_forward_backward(const Problem& problem, const StackedOperator& op, const Vec& xk,
                                          double gamma, const SolverConfig& cfg) {
  Step1Tracker tracker(problem, op, xk, gamma, cfg.kappa, cfg.mu);
  const FrameOperator& frame = problem.move_frame;
  const double lip = step1_lipschitz(op, cfg.kappa, cfg.power_iterations);
  const double t = 1.0 / lip;
  const Eigen::Index bs = frame.block_size();

  const Vec ck = frame.analysis(xk);
  Vec alpha = ck;
  Vec beta = alpha;
  double phi = tracker.initial();
  double tk = 1.0;
  InnerStop stop(cfg.inner_rel_tol);

  Vec u(alpha.size());
  int it = 0;
  while (it < cfg.inner_max_iterations) {
    ++it;
    const Vec xb = frame.synthesis(beta);
    const Vec grad = frame.analysis(2.0 * cfg.kappa * op.adjoint(stacked_residual(problem, op, xb)));
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double w = problem.prior.weight(static_cast<int>(i / bs));
      u[i] = l1_huber_prox_scalar(beta[i] - t * grad[i], t * w, 0.5 * t * gamma, ck[i], cfg.mu);
    }
    const Vec xu = frame.synthesis(u);
    const double phi_u = tracker.evaluate(xu, stacked_residual(problem, op, xu));
    tracker.offer(xu, phi_u);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    const Vec alpha_prev = alpha;
    const double phi_prev = phi;
    if (phi_u <= phi) {
      alpha = u;
      phi = phi_u;
    }
    beta = alpha + (tk / t_next) * (u - alpha) + ((tk - 1.0) / t_next) * (alpha - alpha_prev);
    tk = t_next;
    // A rejected trial leaves phi unchanged; that is not convergence.
    if (phi_u <= phi_prev && stop.update(phi_prev, phi)) break;
  }
  return tracker.finish(it, Step1Method::ForwardBackward);
}

/// Dual side of the prior for the primal-dual scheme: f(x) = h(K x) with
/// h a weighted l1 (other wavelet basis) or a weighted sum of pointwise
/// 2-norms (TV). The dual projection is the prox of h*.
struct PriorDual {
  const Prior& prior;

  Eigen::Index dual_size() const {
    return prior.kind() == PriorKind::TotalVariation ? 2 * prior.size() : prior.size();
  }
  double norm_sq() const { return prior.kind() == PriorKind::TotalVariation ? 8.0 : 1.0; }

  Vec apply(const Vec& x) const {
    const Eigen::Index bs = prior.block_size();
    Vec out(dual_size());
    if (prior.kind() == PriorKind::TotalVariation) {
      for (int b = 0; b < prior.blocks(); ++b) {
        auto seg = out.segment(2 * b * bs, 2 * bs);
        tv_gradient(x.segment(b * bs, bs), prior.side(), seg);
      }
    } else {
      prior.frame().analysis(x, out);
    }
    return out;
  }
  Vec adjoint(const Vec& p) const {
    const Eigen::Index bs = prior.block_size();
    Vec out(prior.size());
    if (prior.kind() == PriorKind::TotalVariation) {
      for (int b = 0; b < prior.blocks(); ++b) {
        auto seg = out.segment(b * bs, bs);
        tv_gradient_adjoint(p.segment(2 * b * bs, 2 * bs), prior.side(), seg);
      }
    } else {
      prior.frame().synthesis(p, out);
    }
    return out;
  }
  void project(Vec& p) const {
    const Eigen::Index bs = prior.block_size();
    for (int b = 0; b < prior.blocks(); ++b) {
      const double w = prior.weight(b);
      if (prior.kind() == PriorKind::TotalVariation) {
        auto seg = p.segment(2 * b * bs, 2 * bs);
        project_pointwise_ball(seg, w);
      } else {
        p.segment(b * bs, bs) = p.segment(b * bs, bs).cwiseMax(-w).cwiseMin(w);
      }
    }
  }
};

/// prox of tau * gamma/2 * h_mu(D^T (x - x^k))
inline Vec move_prox(const FrameOperator& frame, const Vec& v, const Vec& xk, double lambda, double mu) {
  const Vec alpha = frame.analysis(v - xk);
  return xk + frame.synthesis(huber_prox(alpha, lambda, mu));
}

/// Condat-Vu primal-dual iteration: the fidelity by its gradient, the
/// cost-to-move by its prox, the prior through its dual variable.
inline Step1Result step1_primal_dual(const Problem& problem, const StackedOperator& op, const Vec& xk, double gamma,
                                     const SolverConfig& cfg, Vec* warm_dual = nullptr) {
  Step1Tracker tracker(problem, op, xk, gamma, cfg.kappa, cfg.mu);
  const PriorDual dual{problem.prior};
  const double lip = step1_lipschitz(op, cfg.kappa, cfg.power_iterations);
  const double sigma = 0.5 * lip / dual.norm_sq();
  const double tau = 0.99 / (0.5 * lip + sigma * dual.norm_sq());

  Vec x = xk;
  Vec p = (warm_dual && warm_dual->size() == dual.dual_size()) ? *warm_dual : Vec::Zero(dual.dual_size());
  Vec r = stacked_residual(problem, op, x);
  double phi = tracker.initial();
  InnerStop stop(cfg.inner_rel_tol);
  int it = 0;
  while (it < cfg.inner_max_iterations) {
    ++it;
    const Vec grad = 2.0 * cfg.kappa * op.adjoint(r);
    const Vec x_new = move_prox(problem.move_frame, x - tau * (grad + dual.adjoint(p)), xk, 0.5 * tau * gamma, cfg.mu);
    p += sigma * dual.apply(2.0 * x_new - x);
    dual.project(p);
    x = x_new;
    r = stacked_residual(problem, op, x);
    const double phi_new = tracker.evaluate(x, r);
    tracker.offer(x, phi_new);
    const bool done = stop.update(phi, phi_new);
    phi = phi_new;
    if (done) break;
  }
  if (warm_dual) *warm_dual = p;
  return tracker.finish(it, Step1Method::PrimalDual);
}

/// Generalized forward-backward with two prox terms (prior and cost-to-move)
/// of equal weight. The TV prox is itself iterative.
inline Step1Result step1_generalized_fb(const Problem& problem, const StackedOperator& op, const Vec& xk, double gamma,
                                        const SolverConfig& cfg) {
  Step1Tracker tracker(problem, op, xk, gamma, cfg.kappa, cfg.mu);
  const double lip = step1_lipschitz(op, cfg.kappa, cfg.power_iterations);
  const double t = 1.0 / lip;
  Vec x = xk;
  Vec z1 = xk;
  Vec z2 = xk;
  Vec r = stacked_residual(problem, op, x);
  double phi = tracker.initial();
  InnerStop stop(cfg.inner_rel_tol);
  int it = 0;
  while (it < cfg.inner_max_iterations) {
    ++it;
    const Vec grad = 2.0 * cfg.kappa * op.adjoint(r);
    const Vec shifted = 2.0 * x - t * grad;
    z1 += problem.prior.prox(shifted - z1, 2.0 * t, cfg.tv_iterations) - x;
    z2 += move_prox(problem.move_frame, shifted - z2, xk, t * gamma, cfg.mu) - x;
    x = 0.5 * (z1 + z2);
    r = stacked_residual(problem, op, x);
    const double phi_new = tracker.evaluate(x, r);
    tracker.offer(x, phi_new);
    const bool done = stop.update(phi, phi_new);
    phi = phi_new;
    if (done) break;
  }
  return tracker.finish(it, Step1Method::GeneralizedForwardBackward);
}

}  // namespace detail

/// Step 1: x^{k+1} ~ argmin_x L(x, theta^k) + gamma/2 h_mu(D^T (x - x^k)).
/// The returned point never has a larger step-1 objective than x^k; if the
/// inner solver cannot improve on x^k, x^k itself is returned.
inline Step1Result step1_image_update(const Problem& problem, const StackedOperator& op, const Vec& xk, double gamma,
                                      const SolverConfig& cfg, Vec* warm_dual = nullptr) {
  require_size(xk.size(), problem.unknowns(), "step1 x^k");
  if (!(gamma > 0.0)) throw std::invalid_argument("step1: gamma must be > 0");
  switch (resolve_step1_method(problem, cfg.step1)) {
    case Step1Method::ForwardBackward: return detail::step1_forward_backward(problem, op, xk, gamma, cfg);
    case Step1Method::GeneralizedForwardBackward: return detail::step1_generalized_fb(problem, op, xk, gamma, cfg);
    default: return detail::step1_primal_dual(problem, op, xk, gamma, cfg, warm_dual);
  }
}

}  // namespace mvr
