#pragma once

#include "mvr/core.hpp"
#include "mvr/geometry/transform.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mvr {

/// gamma_x^k = max(decay^k * initial, floor). Bounded in [min(), max()].
struct GammaSchedule {
  double initial = 2000.0;
  double decay = 0.9;
  double floor = 0.1;

  double at(int k) const { return std::max(initial * std::pow(decay, k), floor); }
  double min() const { return floor; }
  double max() const { return std::max(initial, floor); }
};

enum class Step1Method {
  Auto,            // forward-backward when the joint prox is exact, else primal-dual
  ForwardBackward, // monotone FISTA with the exact l1 + cost-to-move prox
  PrimalDual,      // Condat-Vu: fidelity by gradient, cost-to-move by prox, prior by dual
  GeneralizedForwardBackward,
};

struct SolverConfig {
  double kappa = 100.0;
  double gamma_theta = 0.1;
  GammaSchedule gamma_x;
  // Pick gamma_x.initial so that ||A x^1 - y||^2 / ||y||^2 lands in
  // [gamma0_ratio_lo, gamma0_ratio_hi] after the first image step.
  bool auto_gamma0 = false;
  double gamma0_ratio_lo = 0.1;
  double gamma0_ratio_hi = 0.2;
  int gamma0_probes = 8;
  double mu = 1e-10;
  std::vector<ParamBounds> bounds;  // one box per view

  int k_max = 200;
  double tol_x = 1e-5;
  double tol_theta = 1e-6;

  // Step 1
  Step1Method step1 = Step1Method::Auto;
  int inner_max_iterations = 500;
  double inner_rel_tol = 1e-8;
  int power_iterations = 30;
  int tv_iterations = 200;

  // Step 2
  int backtrack_cap = 60;
  double qp_tol = 1e-12;
  int threads = 1;

  // Relative slack for the runtime decrease assertions.
  double decrease_tol = 1e-9;
  bool assert_decrease = true;

  double gamma_min() const { return std::min(gamma_x.min(), gamma_theta); }
  double gamma_max() const { return std::max(gamma_x.max(), gamma_theta); }

  void validate(int views, const TransformModel& model) const {
    if (!(kappa > 0.0)) throw std::invalid_argument("SolverConfig: kappa must be > 0");
    if (!(gamma_theta > 0.0)) throw std::invalid_argument("SolverConfig: gamma_theta must be > 0");
    if (!(gamma_x.floor > 0.0) || !(gamma_x.initial > 0.0) || !(gamma_x.decay > 0.0) || gamma_x.decay > 1.0) {
      throw std::invalid_argument("SolverConfig: gamma_x schedule must stay in (0, inf)");
    }
    if (!(mu > 0.0)) throw std::invalid_argument("SolverConfig: mu must be > 0");
    if (static_cast<int>(bounds.size()) != views) throw DimensionError("SolverConfig: one bound box per view is required");
    for (const auto& b : bounds) {
      require_size(b.lower.size(), model.num_params(), "SolverConfig bounds");
      if (!b.contains(model.identity_params())) {
        throw std::invalid_argument("SolverConfig: identity parameters must be feasible");
      }
    }
    if (k_max < 1) throw std::invalid_argument("SolverConfig: k_max must be >= 1");
    if (backtrack_cap < 1) throw std::invalid_argument("SolverConfig: backtrack_cap must be >= 1");
  }
};

}  // namespace mvr
