#pragma once

#include "mvr/core.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace mvr {

/// Type-erased real linear map R^cols -> R^rows with its adjoint.
///
/// `row_gram` is set when A A^T = row_gram * I is known analytically; the
/// constrained baselines rely on it for their closed-form projection.
class LinearOperator {
 public:
  using Kernel = std::function<void(ConstVecRef, VecRef)>;

  LinearOperator() = default;
  LinearOperator(Eigen::Index rows, Eigen::Index cols, Kernel forward, Kernel adjoint,
                 std::optional<double> row_gram = std::nullopt, std::string name = "linear")
      : rows_(rows),
        cols_(cols),
        forward_(std::move(forward)),
        adjoint_(std::move(adjoint)),
        row_gram_(row_gram),
        name_(std::move(name)) {}

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const std::optional<double>& row_gram() const { return row_gram_; }
  const std::string& name() const { return name_; }

  void apply(ConstVecRef x, VecRef out) const {
    require_size(x.size(), cols_, (name_ + " forward input").c_str());
    require_size(out.size(), rows_, (name_ + " forward output").c_str());
    forward_(x, out);
  }
  Vec apply(ConstVecRef x) const {
    Vec out(rows_);
    apply(x, out);
    return out;
  }

  void adjoint(ConstVecRef v, VecRef out) const {
    require_size(v.size(), rows_, (name_ + " adjoint input").c_str());
    require_size(out.size(), cols_, (name_ + " adjoint output").c_str());
    adjoint_(v, out);
  }
  Vec adjoint(ConstVecRef v) const {
    Vec out(cols_);
    adjoint(v, out);
    return out;
  }

  /// Materialise as a dense matrix, column by column. Small sizes only.
  Mat to_dense() const {
    Mat m(rows_, cols_);
    Vec e = Vec::Zero(cols_);
    Vec col(rows_);
    for (Eigen::Index j = 0; j < cols_; ++j) {
      e[j] = 1.0;
      apply(e, col);
      m.col(j) = col;
      e[j] = 0.0;
    }
    return m;
  }

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  Kernel forward_;
  Kernel adjoint_;
  std::optional<double> row_gram_;
  std::string name_;
};

/// Largest eigenvalue of A^T A by power iteration, starting from a fixed vector.
template <class ApplyFn, class AdjointFn>
double estimate_squared_norm(Eigen::Index cols, ApplyFn&& forward, AdjointFn&& adjoint, int iterations = 30) {
  Vec v = Vec::Ones(cols);
  // Break symmetry so the start vector is not orthogonal to the top eigenvector.
  for (Eigen::Index i = 0; i < cols; ++i) v[i] += 0.01 * std::sin(0.37 * static_cast<double>(i) + 0.1);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec w = adjoint(forward(v));
    lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    v = w / lambda;
  }
  return lambda;
}

inline double estimate_squared_norm(const LinearOperator& op, int iterations = 30) {
  return estimate_squared_norm(
      op.cols(), [&](const Vec& x) { return op.apply(x); }, [&](const Vec& y) { return op.adjoint(y); },
      iterations);
}

}  // namespace mvr
