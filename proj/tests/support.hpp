#pragma once

// Test-side oracles. Kept independent of the library where it matters: the
// dense warp is assembled straight from the kernel formula, and scalar
// minimisation uses golden-section search.

#include "mvr/mvr.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace mvr::test {

inline Vec random_vec(std::mt19937_64& gen, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(gen);
  return v;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

/// Smooth test image: a few Gaussian bumps well inside the grid.
inline Vec smooth_image(const Grid& grid, std::uint64_t seed = 7) {
  std::mt19937_64 gen(seed);
  Vec img = Vec::Zero(grid.size());
  const double s = grid.side();
  for (int b = 0; b < 4; ++b) {
    const double cx = uniform(gen, -0.2, 0.2) * s, cy = uniform(gen, -0.2, 0.2) * s;
    const double sig = uniform(gen, 0.1, 0.2) * s, amp = uniform(gen, 0.3, 1.0);
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      const auto u = grid.coord(k);
      img[k] += amp * std::exp(-0.5 * ((u.x() - cx) * (u.x() - cx) + (u.y() - cy) * (u.y() - cy)) / (sig * sig));
    }
  }
  return img;
}

// tau_theta written out again from the model definitions.
inline std::pair<double, double> oracle_map(TransformKind kind, const Vec& t, double u1, double u2) {
  switch (kind) {
    case TransformKind::Translation: return {u1 + t[0], u2 + t[1]};
    case TransformKind::ScaleTranslation: return {t[0] * u1 + t[1], t[0] * u2 + t[2]};
    case TransformKind::Affine: return {t[0] * u1 + t[1] * u2 + t[2], t[3] * u1 + t[4] * u2 + t[5]};
    case TransformKind::HomographyApprox: {
      const double w = 1.0 - t[6] * u1 - t[7] * u2;
      return {(t[0] * u1 + t[1] * u2 + t[2]) * w, (t[3] * u1 + t[4] * u2 + t[5]) * w};
    }
  }
  return {u1, u2};
}

inline double oracle_keys(double u) {
  const double a = std::abs(u);
  if (a <= 1.0) return 1.5 * a * a * a - 2.5 * a * a + 1.0;
  if (a < 2.0) return -0.5 * a * a * a + 2.5 * a * a - 4.0 * a + 2.0;
  return 0.0;
}

/// T(theta)[k, c] = phi(tau(u_k)_1 - v_c1) phi(tau(u_k)_2 - v_c2), coordinates
/// centred as (col - side/2 + 1, row - side/2 + 1).
inline Mat dense_warp(int side, TransformKind kind, const Vec& theta) {
  const int n = side * side;
  const int o = side / 2 - 1;
  Mat t = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto [c1, c2] = oracle_map(kind, theta, k % side - o, k / side - o);
    for (int c = 0; c < n; ++c) t(k, c) = oracle_keys(c1 - (c % side - o)) * oracle_keys(c2 - (c / side - o));
  }
  return t;
}

inline Mat dense_of(const std::function<Vec(const Vec&)>& f, Eigen::Index cols) {
  Vec e = Vec::Zero(cols);
  Vec first = f(e);
  Mat m(first.size(), cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    e[j] = 1.0;
    m.col(j) = f(e);
    e[j] = 0.0;
  }
  return m;
}

/// |<A x, v> - <x, A^T v>| / max(|<A x, v>|, tiny)
template <class Fwd, class Adj>
double adjoint_mismatch(Fwd&& fwd, Adj&& adj, const Vec& x, const Vec& v) {
  const double lhs = fwd(x).dot(v);
  const double rhs = x.dot(adj(v));
  return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

inline Vec random_theta(std::mt19937_64& gen, const TransformModel& model, double t = 3.0, double a = 0.1,
                        double h = 0.003) {
  Vec th = model.identity_params();
  switch (model.kind()) {
    case TransformKind::Translation:
      th[0] += uniform(gen, -t, t);
      th[1] += uniform(gen, -t, t);
      break;
    case TransformKind::ScaleTranslation:
      th[0] += uniform(gen, -a, a);
      th[1] += uniform(gen, -t, t);
      th[2] += uniform(gen, -t, t);
      break;
    default:
      for (int i : {0, 1, 3, 4}) th[i] += uniform(gen, -a, a);
      th[2] += uniform(gen, -t, t);
      th[5] += uniform(gen, -t, t);
      if (model.kind() == TransformKind::HomographyApprox) {
        th[6] += uniform(gen, -h, h);
        th[7] += uniform(gen, -h, h);
      }
  }
  return th;
}

inline const std::array<TransformModel, 4>& all_models() {
  static const std::array<TransformModel, 4> m = {
      TransformModel(TransformKind::Translation), TransformModel(TransformKind::ScaleTranslation),
      TransformModel(TransformKind::Affine), TransformModel(TransformKind::HomographyApprox)};
  return m;
}

/// Minimiser of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, int iters = 300) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Root of a nondecreasing (sub)derivative g on [lo, hi] by bisection. For a
/// convex scalar objective this is its minimiser, to machine precision.
inline double bisect_root(const std::function<double(double)>& g, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

/// Derivative of the Huber function, written out from its definition.
inline double huber_slope(double t, double mu) { return std::abs(t) <= mu ? t / mu : sign(t); }

/// Relative Frobenius error, guarding a zero reference.
inline double rel_err(const Mat& got, const Mat& ref) {
  return (got - ref).norm() / std::max(ref.norm(), 1e-300);
}

inline std::string source_path(const std::string& rel) { return std::string(MVR_SOURCE_DIR) + "/" + rel; }

}  // namespace mvr::test
