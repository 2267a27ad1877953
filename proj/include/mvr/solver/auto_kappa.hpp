#pragma once

#include "mvr/solver/algorithm.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace mvr {

struct KappaProbe {
  double kappa = 0.0;
  double residual = 0.0;  // ||A(theta*) x* - y||_2 at convergence
};

struct AutoKappaResult {
  double kappa = 0.0;
  double residual = 0.0;
  bool saturated = false;  // target not reachable inside [kappa_min, kappa_max]
  std::vector<KappaProbe> probes;
};

struct AutoKappaOptions {
  double kappa_min = 1e-2;
  double kappa_max = 1e6;
  double initial = 100.0;
  double rel_tol = 0.01;
  int max_probes = 20;
};

/// Finds kappa with residual(kappa) in [(1 - tol) eps, (1 + tol) eps] by
/// bracketing and then regula falsi (Illinois variant) on
/// log residual versus log kappa. The residual decreases as kappa grows.
/// If the target lies outside what [kappa_min, kappa_max] can reach the
/// closest end is returned with `saturated` set.
inline AutoKappaResult auto_kappa(double eps, const std::function<double(double)>& residual_of_kappa,
                                  const AutoKappaOptions& opt = {}) {
  if (!(eps > 0.0)) throw std::invalid_argument("auto_kappa: epsilon must be > 0");
  AutoKappaResult out;
  auto probe = [&](double kappa) {
    if (static_cast<int>(out.probes.size()) >= opt.max_probes) {
      throw std::runtime_error("auto_kappa: no kappa found within the probe budget");
    }
    const double r = residual_of_kappa(kappa);
    out.probes.push_back({kappa, r});
    return r;
  };
  auto accept = [&](double r) {
    return r >= (1.0 - opt.rel_tol) * eps && r <= (1.0 + opt.rel_tol) * eps;
  };
  auto finish = [&](double kappa, double r, bool saturated) {
    out.kappa = kappa;
    out.residual = r;
    out.saturated = saturated;
    return out;
  };

  // f(log kappa) = log(residual / eps): positive for small kappa.
  auto f_of = [&](double r) { return std::log(std::max(r, 1e-300) / eps); };

  double ka = std::clamp(opt.initial, opt.kappa_min, opt.kappa_max);
  double ra = probe(ka);
  if (accept(ra)) return finish(ka, ra, false);
  double kb = ka;
  double rb = ra;
  // Expand by decades until the sign of f changes.
  const bool need_larger = ra > eps;
  while ((rb > eps) == need_larger) {
    ka = kb;
    ra = rb;
    if (need_larger ? kb >= opt.kappa_max : kb <= opt.kappa_min) return finish(kb, rb, true);
    kb = std::clamp(need_larger ? kb * 10.0 : kb / 10.0, opt.kappa_min, opt.kappa_max);
    rb = probe(kb);
    if (accept(rb)) return finish(kb, rb, false);
  }
  double la = std::log(ka), lb = std::log(kb);
  double fa = f_of(ra), fb = f_of(rb);
  int side = 0;
  while (true) {
    const double lc = (fa * lb - fb * la) / (fa - fb);
    const double kc = std::exp(lc);
    const double rc = probe(kc);
    if (accept(rc)) return finish(kc, rc, false);
    const double fc = f_of(rc);
    if ((fc > 0.0) == (fa > 0.0)) {
      la = lc;
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      lb = lc;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
}

/// Convenience wrapper: each probe is a full run of Algorithm 1 with the
/// given kappa, and the residual is taken at its final iterate.
inline AutoKappaResult auto_kappa(double eps, const Problem& problem, const SolverConfig& base,
                                  const std::vector<TransformParams>& theta0, const AutoKappaOptions& opt = {}) {
  auto residual = [&](double kappa) {
    SolverConfig cfg = base;
    cfg.kappa = kappa;
    const Algorithm1Result run = run_algorithm1(problem, cfg, theta0);
    const StackedOperator op = problem.make_operator(run.estimate.params);
    return stacked_residual(problem, op, run.estimate.x).norm();
  };
  return auto_kappa(eps, residual, opt);
}

}  // namespace mvr
