#pragma once

#include "mvr/core.hpp"
#include "mvr/geometry/transform.hpp"
#include "mvr/operators/stacked.hpp"
#include "mvr/priors/huber.hpp"
#include "mvr/priors/prior.hpp"
#include "mvr/priors/wavelet.hpp"

#include <vector>

namespace mvr {

/// Everything fixed during a reconstruction: data, sensing operators, prior,
/// cost-to-move frame and the transform family.
struct Problem {
  Grid grid{8};
  MeasurementSet data;
  Prior prior;
  FrameOperator move_frame;  // D in the cost-to-move term
  TransformModel model{TransformKind::Translation};
  KernelKind kernel = KernelKind::Keys;

  int views() const { return data.views(); }
  Eigen::Index pixels() const { return grid.size(); }
  Eigen::Index unknowns() const { return (views() + 1) * pixels(); }

  void validate() const {
    data.validate(grid);
    require_size(prior.size(), unknowns(), "Problem prior size");
    require_size(move_frame.size(), unknowns(), "Problem move frame size");
    if (prior.side() != grid.side()) throw DimensionError("Problem: prior grid does not match");
  }

  StackedOperator make_operator(const std::vector<TransformParams>& params) const {
    return StackedOperator(grid, data.ops, params, kernel);
  }

  /// sum_j ||y_j||^2
  double data_energy() const {
    double e = 0.0;
    for (const auto& y : data.y) e += y.squaredNorm();
    return e;
  }
};

struct SceneEstimate {
  Vec x;  // (x0, x1, ..., xl) back to back
  std::vector<TransformParams> params;

  ImageStack images(const Grid& grid) const { return ImageStack(grid, static_cast<int>(params.size()), x); }
};

struct ObjectiveParts {
  double fidelity = 0.0;  // kappa ||A(theta) x - y||^2
  double prior = 0.0;     // f(x)
  double residual_sq = 0.0;
  double total() const { return fidelity + prior; }
};

/// Residual A(theta) x - y for all views.
inline Vec stacked_residual(const Problem& problem, const StackedOperator& op, ConstVecRef x) {
  Vec r = op.apply(x);
  const Eigen::Index m = op.rows_per_view();
  for (int j = 0; j < op.views(); ++j) r.segment(j * m, m) -= problem.data.y[static_cast<std::size_t>(j)];
  return r;
}

inline ObjectiveParts objective_parts(const Problem& problem, const StackedOperator& op, ConstVecRef x,
                                      double kappa) {
  ObjectiveParts parts;
  parts.residual_sq = stacked_residual(problem, op, x).squaredNorm();
  parts.fidelity = kappa * parts.residual_sq;
  parts.prior = problem.prior.value(x);
  return parts;
}

/// L(x, theta) = f(x) + kappa ||A(theta) x - y||^2, with theta required to
/// lie in its box (the indicator term is then zero).
inline double objective(const Problem& problem, ConstVecRef x, const std::vector<TransformParams>& params,
                        double kappa, const std::vector<ParamBounds>& bounds) {
  if (bounds.size() != params.size()) throw DimensionError("objective: one bound box per view is required");
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (!bounds[j].contains(params[j].theta)) throw std::domain_error("objective: parameters outside their box");
  }
  require_size(x.size(), problem.unknowns(), "objective x");
  return objective_parts(problem, problem.make_operator(params), x, kappa).total();
}

/// h_mu(D^T d)
inline double move_cost(const FrameOperator& frame, ConstVecRef d, double mu) {
  return huber_value(frame.analysis(d), mu);
}

/// Fraction of analysis coefficients with magnitude above `threshold`.
inline double coefficient_density(const FrameOperator& frame, ConstVecRef x, double threshold = 1e-8) {
  const Vec alpha = frame.analysis(x);
  if (alpha.size() == 0) return 0.0;
  return static_cast<double>((alpha.array().abs() > threshold).count()) / static_cast<double>(alpha.size());
}

}  // namespace mvr
