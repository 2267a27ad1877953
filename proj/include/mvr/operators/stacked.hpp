#pragma once

#include "mvr/core.hpp"
#include "mvr/geometry/warp.hpp"
#include "mvr/operators/linear_operator.hpp"

#include <vector>

namespace mvr {

/// Observations y_1..y_l, all of length m, with the sensing operator of each view.
struct MeasurementSet {
  std::vector<Vec> y;
  std::vector<LinearOperator> ops;

  int views() const { return static_cast<int>(y.size()); }
  Eigen::Index rows_per_view() const { return y.empty() ? 0 : y.front().size(); }

  void validate(const Grid& grid) const {
    if (y.empty()) throw std::invalid_argument("MeasurementSet: at least one view is required");
    if (ops.size() != y.size()) throw DimensionError("MeasurementSet: one operator per view is required");
    for (std::size_t j = 0; j < y.size(); ++j) {
      require_size(y[j].size(), rows_per_view(), "MeasurementSet view length");
      require_size(ops[j].rows(), y[j].size(), "MeasurementSet operator rows");
      require_size(ops[j].cols(), grid.size(), "MeasurementSet operator cols");
    }
  }

  /// All views stacked into one vector.
  Vec concatenated() const {
    Vec out(views() * rows_per_view());
    for (int j = 0; j < views(); ++j) out.segment(j * rows_per_view(), rows_per_view()) = y[j];
    return out;
  }
};

/// Joint operator A(theta) acting on the stack (x0, x1, ..., xl):
/// block j of the output is A_j (T(theta_j) x0 + x_j).
class StackedOperator {
 public:
  StackedOperator(Grid grid, std::vector<LinearOperator> ops, std::vector<TransformParams> params,
                  KernelKind kernel = KernelKind::Keys)
      : grid_(grid), ops_(std::move(ops)), kernel_(kernel) {
    if (ops_.empty()) throw std::invalid_argument("StackedOperator: at least one view is required");
    if (params.size() != ops_.size()) throw DimensionError("StackedOperator: one parameter vector per view is required");
    m_ = ops_.front().rows();
    for (const auto& op : ops_) {
      require_size(op.cols(), grid_.size(), "StackedOperator view operator cols");
      require_size(op.rows(), m_, "StackedOperator view operator rows");
    }
    warps_.reserve(params.size());
    for (auto& p : params) warps_.emplace_back(grid_, std::move(p), kernel_);
  }

  const Grid& grid() const { return grid_; }
  int views() const { return static_cast<int>(ops_.size()); }
  Eigen::Index pixels() const { return grid_.size(); }
  Eigen::Index rows_per_view() const { return m_; }
  Eigen::Index rows() const { return views() * m_; }
  Eigen::Index cols() const { return (views() + 1) * pixels(); }
  KernelKind kernel() const { return kernel_; }

  const LinearOperator& view_op(int j) const { return ops_[static_cast<std::size_t>(j)]; }
  /// Warp of view j (0-based).
  const WarpOperator& warp(int j) const { return warps_[static_cast<std::size_t>(j)]; }
  const TransformParams& params(int j) const { return warp(j).params(); }

  void set_params(int j, TransformParams p) {
    warps_[static_cast<std::size_t>(j)] = WarpOperator(grid_, std::move(p), kernel_);
  }
  void set_warp(int j, WarpOperator w) { warps_[static_cast<std::size_t>(j)] = std::move(w); }

  /// Image seen by view j before sensing: T(theta_j) x0 + x_j.
  Vec view_image(int j, ConstVecRef x) const {
    require_size(x.size(), cols(), "StackedOperator view_image");
    Vec img = warp(j).apply(x.segment(0, pixels()));
    img += x.segment((j + 1) * pixels(), pixels());
    return img;
  }

  void apply_view(int j, ConstVecRef x, VecRef out) const { view_op(j).apply(view_image(j, x), out); }

  void apply(ConstVecRef x, VecRef out) const {
    require_size(x.size(), cols(), "StackedOperator::apply input");
    require_size(out.size(), rows(), "StackedOperator::apply output");
    for (int j = 0; j < views(); ++j) {
      auto block = out.segment(j * m_, m_);
      apply_view(j, x, block);
    }
  }
  Vec apply(ConstVecRef x) const {
    Vec out(rows());
    apply(x, out);
    return out;
  }

  /// x0 slot receives sum_j T_j^T A_j^T v_j, slot j receives A_j^T v_j.
  void adjoint(ConstVecRef v, VecRef out) const {
    require_size(v.size(), rows(), "StackedOperator::adjoint input");
    require_size(out.size(), cols(), "StackedOperator::adjoint output");
    out.segment(0, pixels()).setZero();
    Vec back(pixels());
    for (int j = 0; j < views(); ++j) {
      auto slot = out.segment((j + 1) * pixels(), pixels());
      view_op(j).adjoint(v.segment(j * m_, m_), slot);
      warp(j).adjoint(slot, back);
      out.segment(0, pixels()) += back;
    }
  }
  Vec adjoint(ConstVecRef v) const {
    Vec out(cols());
    adjoint(v, out);
    return out;
  }

  double squared_norm_estimate(int iterations = 30) const {
    return estimate_squared_norm(
        cols(), [&](const Vec& x) { return apply(x); }, [&](const Vec& y) { return adjoint(y); }, iterations);
  }

 private:
  Grid grid_;
  std::vector<LinearOperator> ops_;
  std::vector<WarpOperator> warps_;
  KernelKind kernel_;
  Eigen::Index m_ = 0;
};

}  // namespace mvr
