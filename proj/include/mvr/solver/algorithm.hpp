#pragma once

#include "mvr/solver/config.hpp"
#include "mvr/solver/problem.hpp"
#include "mvr/solver/step1.hpp"
#include "mvr/solver/step2.hpp"
#include "mvr/solver/trace.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mvr {

/// Raised when a descent property fails at runtime. Carries the trace up to
/// and including the offending iteration.
class ConvergenceAssertionError : public std::runtime_error {
 public:
  ConvergenceAssertionError(const std::string& what, IterationTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const IterationTrace& trace() const { return trace_; }

 private:
  IterationTrace trace_;
};

struct Algorithm1Result {
  SceneEstimate estimate;
  IterationTrace trace;
  double gamma0 = 0.0;
  double first_step_ratio = 0.0;  // ||A x^1 - y||^2 / ||y||^2
  double first_step_density = 0.0;
  double final_density = 0.0;
};

/// Per-iteration descent checks recomputed from a trace.
struct TraceCheck {
  bool monotone = true;
  bool sufficient_decrease = true;
  bool telescoping = true;
  double increment_sum = 0.0;  // sum of gamma_min/2 [kappa ||dtheta||^2 + move]
  double budget = 0.0;         // L(x^0, theta^0) - L_final
  double final_increment = 0.0;
  int first_violation = -1;

  bool all() const { return monotone && sufficient_decrease && telescoping; }
};

inline TraceCheck check_trace(const IterationTrace& trace, double rel_tol = 1e-9) {
  TraceCheck c;
  double prev = trace.initial_objective;
  const double half = 0.5 * trace.gamma_min;
  for (const auto& r : trace.records) {
    const double slack = rel_tol * (1.0 + std::abs(prev));
    const double inc = half * (trace.kappa * r.dtheta * r.dtheta + r.move);
    if (r.objective > prev + slack) {
      c.monotone = false;
      if (c.first_violation < 0) c.first_violation = r.k;
    }
    if (r.objective + inc > prev + slack) {
      c.sufficient_decrease = false;
      if (c.first_violation < 0) c.first_violation = r.k;
    }
    c.increment_sum += inc;
    prev = r.objective;
  }
  c.budget = trace.initial_objective - trace.final_objective();
  c.telescoping = c.increment_sum <= c.budget + rel_tol * (1.0 + std::abs(trace.initial_objective));
  if (!trace.records.empty()) c.final_increment = trace.records.back().dx + trace.records.back().dtheta;
  return c;
}

struct Gamma0Calibration {
  double gamma0 = 0.0;
  double ratio = 0.0;
  int probes = 0;
  bool in_range = false;
};

/// Search over log gamma for a first image step whose relative residual
/// ||A x^1 - y||^2 / ||y||^2 lies in [lo, hi]. The ratio grows with gamma
/// (a larger cost-to-move keeps x^1 closer to 0).
inline Gamma0Calibration calibrate_gamma0(const Problem& problem, const SolverConfig& cfg,
                                          const std::vector<TransformParams>& theta0) {
  const StackedOperator op = problem.make_operator(theta0);
  const Vec x0 = Vec::Zero(problem.unknowns());
  const double energy = problem.data_energy();
  if (energy == 0.0) return {cfg.gamma_x.initial, 0.0, 0, false};
  const double target = 0.5 * (cfg.gamma0_ratio_lo + cfg.gamma0_ratio_hi);
  auto probe = [&](double gamma) {
    const Step1Result s = step1_image_update(problem, op, x0, gamma, cfg);
    return s.parts.residual_sq / energy;
  };

  Gamma0Calibration best;
  double best_dist = std::numeric_limits<double>::infinity();
  double lo_g = 0.0, hi_g = 0.0;  // ratio(lo_g) < lo, ratio(hi_g) > hi
  double gamma = cfg.gamma_x.initial;
  for (int n = 0; n < cfg.gamma0_probes; ++n) {
    const double ratio = probe(gamma);
    ++best.probes;
    const double dist = std::abs(std::log(std::max(ratio, 1e-300) / target));
    if (dist < best_dist) {
      best_dist = dist;
      best.gamma0 = gamma;
      best.ratio = ratio;
    }
    if (ratio >= cfg.gamma0_ratio_lo && ratio <= cfg.gamma0_ratio_hi) {
      best = {gamma, ratio, best.probes, true};
      return best;
    }
    if (ratio < cfg.gamma0_ratio_lo) {
      lo_g = gamma;
    } else {
      hi_g = gamma;
    }
    if (lo_g > 0.0 && hi_g > 0.0) {
      gamma = std::sqrt(lo_g * hi_g);
    } else if (lo_g > 0.0) {
      gamma = lo_g * 10.0;
    } else {
      gamma = hi_g / 10.0;
    }
  }
  return best;
}

/// Algorithm 1 from x^0 = 0 and the given feasible theta^0.
inline Algorithm1Result run_algorithm1(const Problem& problem, SolverConfig cfg,
                                       const std::vector<TransformParams>& theta0) {
  problem.validate();
  cfg.validate(problem.views(), problem.model);
  if (static_cast<int>(theta0.size()) != problem.views()) {
    throw DimensionError("run_algorithm1: one initial parameter vector per view is required");
  }
  for (std::size_t j = 0; j < theta0.size(); ++j) {
    if (!(theta0[j].model == problem.model)) throw std::invalid_argument("run_algorithm1: model mismatch");
    if (!cfg.bounds[j].contains(theta0[j].theta)) throw std::domain_error("run_algorithm1: theta^0 infeasible");
  }

  Algorithm1Result result;
  if (cfg.auto_gamma0) {
    const Gamma0Calibration cal = calibrate_gamma0(problem, cfg, theta0);
    cfg.gamma_x.initial = cal.gamma0;
  }
  result.gamma0 = cfg.gamma_x.initial;

  StackedOperator op = problem.make_operator(theta0);
  Vec x = Vec::Zero(problem.unknowns());
  IterationTrace& trace = result.trace;
  trace.kappa = cfg.kappa;
  trace.gamma_min = cfg.gamma_min();
  trace.initial_objective = objective_parts(problem, op, x, cfg.kappa).total();
  const double energy = problem.data_energy();

  double L_prev = trace.initial_objective;
  Vec warm_dual;
  for (int k = 0; k < cfg.k_max; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const double gamma = cfg.gamma_x.at(k);
    IterationRecord rec;
    rec.k = k;
    rec.gamma_x = gamma;

    Step1Result s1 = step1_image_update(problem, op, x, gamma, cfg, &warm_dual);
    rec.objective_after_step1 = s1.parts.total();
    rec.inner_iterations = s1.iterations;
    rec.step1_fallback = s1.fallback;
    rec.move = s1.move;
    rec.dx = (s1.x - x).norm();
    rec.coefficient_density = coefficient_density(problem.move_frame, s1.x);
    if (k == 0) {
      result.first_step_ratio = energy > 0.0 ? s1.parts.residual_sq / energy : 0.0;
      result.first_step_density = rec.coefficient_density;
    }
    const double x_norm = x.norm();
    x = std::move(s1.x);

    double dtheta_sq = 0.0;
    std::vector<Step2Result> s2 = step2_all_views(problem, op, x, cfg);
    for (int j = 0; j < op.views(); ++j) {
      auto& r = s2[static_cast<std::size_t>(j)];
      dtheta_sq += (r.params.theta - op.params(j).theta).squaredNorm();
      rec.i_max = std::max(rec.i_max, r.i);
      if (r.skipped) ++rec.step2_skipped;
      if (!cfg.bounds[static_cast<std::size_t>(j)].contains(r.params.theta)) {
        throw ConvergenceAssertionError("parameters left their box at iteration " + std::to_string(k), trace);
      }
      op.set_warp(j, std::move(r.warp));
    }
    rec.dtheta = std::sqrt(dtheta_sq);

    const ObjectiveParts parts = objective_parts(problem, op, x, cfg.kappa);
    rec.objective = parts.total();
    rec.fidelity = parts.fidelity;
    rec.prior = parts.prior;
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    trace.records.push_back(rec);

    if (cfg.assert_decrease) {
      const double slack = cfg.decrease_tol * (1.0 + std::abs(L_prev));
      const double inc = 0.5 * trace.gamma_min * (cfg.kappa * dtheta_sq + rec.move);
      std::ostringstream msg;
      if (!(rec.objective <= L_prev + slack)) {
        msg << "objective increased at iteration " << k << ": " << L_prev << " -> " << rec.objective;
      } else if (!(rec.objective + inc <= L_prev + slack)) {
        msg << "sufficient decrease violated at iteration " << k << ": " << rec.objective << " + " << inc << " > "
            << L_prev;
      }
      if (!msg.str().empty()) throw ConvergenceAssertionError(msg.str(), trace);
    }
    L_prev = rec.objective;

    if (rec.dx <= cfg.tol_x * std::max(1.0, x_norm) && rec.dtheta <= cfg.tol_theta) {
      trace.converged = true;
      break;
    }
  }

  result.estimate.x = std::move(x);
  for (int j = 0; j < op.views(); ++j) result.estimate.params.push_back(op.params(j));
  result.final_density = coefficient_density(problem.move_frame, result.estimate.x);
  return result;
}

}  // namespace mvr
