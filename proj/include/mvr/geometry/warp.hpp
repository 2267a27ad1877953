#pragma once

#include "mvr/core.hpp"
#include "mvr/geometry/kernel.hpp"
#include "mvr/geometry/transform.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mvr {

/// Matrix-free interpolation matrix T(theta): row k resamples the image at
/// tau_theta(u_k) through the separable kernel phi(v1) phi(v2). The image is
/// extended by zero outside the grid, so off-grid taps contribute nothing.
///
/// Each row touches at most a 4 x 4 stencil. Weights and their derivatives
/// are tabulated once at construction; the operator is immutable afterwards
/// and can be shared between threads.
class WarpOperator {
 public:
  WarpOperator() = default;

  WarpOperator(Grid grid, TransformParams params, KernelKind kernel = KernelKind::Keys)
      : grid_(grid), params_(std::move(params)), kernel_(kernel) {
    build();
  }

  const Grid& grid() const { return grid_; }
  const TransformParams& params() const { return params_; }
  const TransformModel& model() const { return params_.model; }
  KernelKind kernel() const { return kernel_; }
  Eigen::Index size() const { return grid_.size(); }

  /// out = T(theta) x
  void apply(ConstVecRef x, VecRef out) const {
    require_size(x.size(), size(), "WarpOperator::apply input");
    require_size(out.size(), size(), "WarpOperator::apply output");
    const int side = grid_.side();
    for (Eigen::Index k = 0; k < size(); ++k) {
      const Row& r = rows_[k];
      double acc = 0.0;
      for (int b = r.b_lo; b <= r.b_hi; ++b) {
        const double* px = x.data() + static_cast<Eigen::Index>(r.iy + b) * side + (r.ix + r.a_lo);
        double line = 0.0;
        for (int a = r.a_lo; a <= r.a_hi; ++a) line += r.wx[a] * px[a - r.a_lo];
        acc += r.wy[b] * line;
      }
      out[k] = acc;
    }
  }

  Vec apply(ConstVecRef x) const {
    Vec out(size());
    apply(x, out);
    return out;
  }

  /// out = T(theta)^T v
  void adjoint(ConstVecRef v, VecRef out) const {
    require_size(v.size(), size(), "WarpOperator::adjoint input");
    require_size(out.size(), size(), "WarpOperator::adjoint output");
    out.setZero();
    const int side = grid_.side();
    for (Eigen::Index k = 0; k < size(); ++k) {
      const Row& r = rows_[k];
      const double vk = v[k];
      if (vk == 0.0) continue;
      for (int b = r.b_lo; b <= r.b_hi; ++b) {
        double* px = out.data() + static_cast<Eigen::Index>(r.iy + b) * side + (r.ix + r.a_lo);
        const double s = vk * r.wy[b];
        for (int a = r.a_lo; a <= r.a_hi; ++a) px[a - r.a_lo] += s * r.wx[a];
      }
    }
  }

  Vec adjoint(ConstVecRef v) const {
    Vec out(size());
    adjoint(v, out);
    return out;
  }

  /// Dense n x p matrix whose column i is d/d theta_i [T(theta) x].
  Mat jacobian(ConstVecRef x) const {
    require_size(x.size(), size(), "WarpOperator::jacobian input");
    const int p = model().num_params();
    Mat jac = Mat::Zero(size(), p);
    const int side = grid_.side();
    for (Eigen::Index k = 0; k < size(); ++k) {
      const Row& r = rows_[k];
      if (r.a_lo > r.a_hi || r.b_lo > r.b_hi) continue;
      // Spatial gradient of the interpolated image at tau(u_k).
      double gx = 0.0;
      double gy = 0.0;
      for (int b = r.b_lo; b <= r.b_hi; ++b) {
        const double* px = x.data() + static_cast<Eigen::Index>(r.iy + b) * side + (r.ix + r.a_lo);
        double line = 0.0;
        double dline = 0.0;
        for (int a = r.a_lo; a <= r.a_hi; ++a) {
          line += r.wx[a] * px[a - r.a_lo];
          dline += r.dwx[a] * px[a - r.a_lo];
        }
        gx += r.wy[b] * dline;
        gy += r.dwy[b] * line;
      }
      if (gx == 0.0 && gy == 0.0) continue;
      const auto dtau = map_point_param_jacobian(model(), params_.theta, grid_.coord(k));
      for (int i = 0; i < p; ++i) jac(k, i) = gx * dtau(0, i) + gy * dtau(1, i);
    }
    return jac;
  }

  /// Explicit T(theta) entry; for tests and small diagnostics.
  double entry(Eigen::Index row, Eigen::Index col) const {
    const Eigen::Vector2d c = map_point(model(), params_.theta, grid_.coord(row));
    const Eigen::Vector2d uc = grid_.coord(col);
    return kernel_value(kernel_, c.x() - uc.x()) * kernel_value(kernel_, c.y() - uc.y());
  }

  /// Number of structurally nonzero taps of a row.
  int row_taps(Eigen::Index k) const {
    const Row& r = rows_[k];
    if (r.a_lo > r.a_hi || r.b_lo > r.b_hi) return 0;
    return (r.a_hi - r.a_lo + 1) * (r.b_hi - r.b_lo + 1);
  }

 private:
  struct Row {
    int ix = 0;  // array column of tap 0
    int iy = 0;  // array row of tap 0
    std::int8_t a_lo = 0, a_hi = -1, b_lo = 0, b_hi = -1;  // in-grid tap ranges
    std::array<double, 4> wx{}, wy{}, dwx{}, dwy{};
  };

  void build() {
    require_size(params_.theta.size(), model().num_params(), "WarpOperator theta");
    const int side = grid_.side();
    const double origin = grid_.origin();
    rows_.assign(static_cast<std::size_t>(size()), Row{});
    for (Eigen::Index k = 0; k < size(); ++k) {
      const Eigen::Vector2d c = map_point(model(), params_.theta, grid_.coord(k));
      // Continuous array coordinates of the mapped point.
      const double cx = c.x() + origin;
      const double cy = c.y() + origin;
      Row& r = rows_[k];
      if (!std::isfinite(cx) || !std::isfinite(cy) || cx <= -2.0 || cy <= -2.0 || cx >= side + 1.0 ||
          cy >= side + 1.0) {
        continue;
      }
      const int fx = static_cast<int>(std::floor(cx));
      const int fy = static_cast<int>(std::floor(cy));
      r.ix = fx - 1;
      r.iy = fy - 1;
      for (int a = 0; a < 4; ++a) {
        r.wx[a] = kernel_value(kernel_, cx - (r.ix + a));
        r.dwx[a] = kernel_derivative(kernel_, cx - (r.ix + a));
        r.wy[a] = kernel_value(kernel_, cy - (r.iy + a));
        r.dwy[a] = kernel_derivative(kernel_, cy - (r.iy + a));
      }
      r.a_lo = static_cast<std::int8_t>(std::max(0, -r.ix));
      r.a_hi = static_cast<std::int8_t>(std::min(3, side - 1 - r.ix));
      r.b_lo = static_cast<std::int8_t>(std::max(0, -r.iy));
      r.b_hi = static_cast<std::int8_t>(std::min(3, side - 1 - r.iy));
    }
  }

  Grid grid_;
  TransformParams params_;
  KernelKind kernel_ = KernelKind::Keys;
  std::vector<Row> rows_;
};

}  // namespace mvr
