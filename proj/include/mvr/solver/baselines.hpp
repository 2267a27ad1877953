#pragma once

#include "mvr/core.hpp"
#include "mvr/operators/linear_operator.hpp"
#include "mvr/priors/huber.hpp"
#include "mvr/priors/wavelet.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mvr {

struct BaselineOptions {
  double step = 0.1;  // Douglas-Rachford prox parameter
  int max_iterations = 20000;
  double tol = 1e-9;  // relative change of the objective and of the iterate gap
};

struct BaselineResult {
  std::vector<Vec> images;
  double objective = 0.0;
  double residual = 0.0;  // ||Y - A X||_F
  int iterations = 0;
};

enum class SparsityNorm { L1, Group21 };

namespace detail {

/// Views share one orthonormal basis W; alpha holds W^T x_j for every view,
/// view after view.
class ConstrainedSparse {
 public:
  ConstrainedSparse(const OrthoWavelet& w, const std::vector<LinearOperator>& ops, const std::vector<Vec>& y,
                    double eps, SparsityNorm norm)
      : w_(w), ops_(ops), y_(y), eps_(eps), norm_(norm) {
    if (ops.empty() || ops.size() != y.size()) throw DimensionError("baseline: one operator per view is required");
    if (!(eps >= 0.0)) throw std::invalid_argument("baseline: epsilon must be >= 0");
    n_ = w.size();
    for (std::size_t j = 0; j < ops.size(); ++j) {
      require_size(ops[j].cols(), n_, "baseline operator cols");
      require_size(ops[j].rows(), y[j].size(), "baseline operator rows");
      if (!ops[j].row_gram()) {
        throw std::invalid_argument("baseline: operator '" + ops[j].name() + "' has no known A A^T = nu I");
      }
      if (j == 0) nu_ = *ops[j].row_gram();
      if (*ops[j].row_gram() != nu_) throw std::invalid_argument("baseline: all views need the same A A^T");
    }
    if (!(nu_ > 0.0)) throw std::invalid_argument("baseline: A A^T must be positive");
  }

  int views() const { return static_cast<int>(ops_.size()); }
  Eigen::Index n() const { return n_; }

  std::vector<Vec> images(const Vec& alpha) const {
    std::vector<Vec> out;
    for (int j = 0; j < views(); ++j) out.push_back(w_.inverse(alpha.segment(j * n_, n_)));
    return out;
  }

  double residual(const Vec& alpha) const {
    double r2 = 0.0;
    for (int j = 0; j < views(); ++j) r2 += (ops_[j].apply(w_.inverse(alpha.segment(j * n_, n_))) - y_[j]).squaredNorm();
    return std::sqrt(r2);
  }

  double objective(const Vec& alpha) const {
    if (norm_ == SparsityNorm::L1) return alpha.lpNorm<1>();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      double g = 0.0;
      for (int j = 0; j < views(); ++j) g += alpha[j * n_ + i] * alpha[j * n_ + i];
      s += std::sqrt(g);
    }
    return s;
  }

  Vec prox(const Vec& z, double t) const {
    Vec out(z.size());
    if (norm_ == SparsityNorm::L1) {
      for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = soft_threshold(z[i], t);
      return out;
    }
    for (Eigen::Index i = 0; i < n_; ++i) {
      double g = 0.0;
      for (int j = 0; j < views(); ++j) g += z[j * n_ + i] * z[j * n_ + i];
      g = std::sqrt(g);
      const double s = g > t ? 1.0 - t / g : 0.0;
      for (int j = 0; j < views(); ++j) out[j * n_ + i] = s * z[j * n_ + i];
    }
    return out;
  }

  /// Orthogonal projection onto {alpha : ||Y - A W alpha||_F <= eps}. With
  /// B = A W and B B^T = nu I the correction lies in the row space of B.
  Vec project(const Vec& v) const {
    std::vector<Vec> r(static_cast<std::size_t>(views()));
    double r2 = 0.0;
    for (int j = 0; j < views(); ++j) {
      r[j] = ops_[j].apply(w_.inverse(v.segment(j * n_, n_))) - y_[j];
      r2 += r[j].squaredNorm();
    }
    const double rn = std::sqrt(r2);
    if (rn <= eps_) return v;
    const double shrink = (1.0 - eps_ / rn) / nu_;
    Vec out = v;
    for (int j = 0; j < views(); ++j) {
      out.segment(j * n_, n_) -= shrink * w_.forward(ops_[j].adjoint(r[j]));
    }
    return out;
  }

 private:
  const OrthoWavelet& w_;
  const std::vector<LinearOperator>& ops_;
  const std::vector<Vec>& y_;
  double eps_;
  SparsityNorm norm_;
  Eigen::Index n_ = 0;
  double nu_ = 0.0;
};

}  // namespace detail

/// min ||W^T X|| subject to ||Y - A X||_F <= eps by Douglas-Rachford
/// splitting in the coefficient domain. The returned point is the projected
/// iterate, so it satisfies the constraint up to rounding.
inline BaselineResult solve_constrained_sparse(const OrthoWavelet& w, const std::vector<LinearOperator>& ops,
                                               const std::vector<Vec>& y, double eps, SparsityNorm norm,
                                               const BaselineOptions& opt = {}) {
  detail::ConstrainedSparse prob(w, ops, y, eps, norm);
  const Eigen::Index total = prob.views() * prob.n();
  Vec z = Vec::Zero(total);
  Vec beta = prob.project(z);
  double prev_obj = prob.objective(beta);
  int it = 0;
  int quiet = 0;
  while (it < opt.max_iterations) {
    ++it;
    const Vec alpha = prob.prox(z, opt.step);
    beta = prob.project(2.0 * alpha - z);
    z += beta - alpha;
    const double obj = prob.objective(beta);
    const double gap = (alpha - beta).norm();
    const bool small = std::abs(obj - prev_obj) <= opt.tol * std::max(1.0, obj) &&
                       gap <= opt.tol * std::max(1.0, alpha.norm());
    quiet = small ? quiet + 1 : 0;
    prev_obj = obj;
    if (quiet >= 3) break;
  }
  BaselineResult res;
  res.images = prob.images(beta);
  res.objective = prob.objective(beta);
  res.residual = prob.residual(beta);
  res.iterations = it;
  return res;
}

/// Multi-view basis pursuit denoising with an l1 prior on every view.
inline BaselineResult solve_bpdn(const OrthoWavelet& w, const std::vector<LinearOperator>& ops,
                                 const std::vector<Vec>& y, double eps, const BaselineOptions& opt = {}) {
  return solve_constrained_sparse(w, ops, y, eps, SparsityNorm::L1, opt);
}

/// Joint-sparsity variant: l2 across views, l1 across coefficients.
inline BaselineResult solve_group_sparse(const OrthoWavelet& w, const std::vector<LinearOperator>& ops,
                                         const std::vector<Vec>& y, double eps, const BaselineOptions& opt = {}) {
  return solve_constrained_sparse(w, ops, y, eps, SparsityNorm::Group21, opt);
}

}  // namespace mvr
