#pragma once

#include "mvr/core.hpp"
#include "mvr/geometry/transform.hpp"
#include "mvr/geometry/warp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mvr {

/// l2 bound eps with ||noise||^2 <= eps^2 at the 99th percentile of
/// sigma^2 chi^2(dof), using the Wilson-Hilferty approximation of the
/// chi-square quantile.
inline double chi_square_q99(double dof) {
  if (!(dof >= 1.0)) throw std::invalid_argument("chi_square_q99: dof must be >= 1");
  const double z99 = 2.326;
  const double c = 2.0 / (9.0 * dof);
  const double base = 1.0 - c + z99 * std::sqrt(c);
  return dof * base * base * base;
}

inline double noise_bound(double sigma, double dof) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise_bound: sigma must be >= 0");
  return sigma * std::sqrt(chi_square_q99(dof));
}

constexpr double kSnrCapDb = 300.0;

/// -20 log10(||estimate - reference|| / ||reference||), capped.
inline double snr_db(ConstVecRef estimate, ConstVecRef reference) {
  require_size(estimate.size(), reference.size(), "snr_db");
  const double ref = reference.norm();
  if (ref == 0.0) throw std::invalid_argument("snr_db: reference image is zero");
  const double err = (estimate - reference).norm();
  if (err == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, -20.0 * std::log10(err / ref));
}

/// SNR of view j reconstructed as T(theta_j*) x0* + x_j* against the true image.
inline double reconstruction_snr(const Grid& grid, ConstVecRef x0, ConstVecRef xj, const TransformParams& theta_j,
                                 ConstVecRef truth, KernelKind kernel = KernelKind::Keys) {
  const WarpOperator warp(grid, theta_j, kernel);
  Vec est = warp.apply(x0);
  est += xj;
  return snr_db(est, truth);
}

inline double mean_squared_error(ConstVecRef a, ConstVecRef b) {
  require_size(a.size(), b.size(), "mean_squared_error");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

namespace detail {

inline Eigen::Matrix3d affine_matrix(const TransformModel& model, const Vec& t) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  switch (model.kind()) {
    case TransformKind::Translation:
      m(0, 2) = t[0];
      m(1, 2) = t[1];
      break;
    case TransformKind::ScaleTranslation:
      m(0, 0) = m(1, 1) = t[0];
      m(0, 2) = t[1];
      m(1, 2) = t[2];
      break;
    default:
      m << t[0], t[1], t[2], t[3], t[4], t[5], 0.0, 0.0, 1.0;
  }
  return m;
}

/// v with tau(v) = target, by Newton's method from the affine part's inverse.
inline Eigen::Vector2d invert_point(const TransformModel& model, const Vec& theta, const Eigen::Vector2d& target) {
  const Eigen::Matrix3d m = affine_matrix(TransformModel(TransformKind::Affine), theta.head(6));
  Eigen::Vector2d v = (m.inverse() * target.homogeneous()).head<2>();
  for (int it = 0; it < 50; ++it) {
    const Eigen::Vector2d f = map_point(model, theta, v) - target;
    if (f.norm() <= 1e-14 * (1.0 + target.norm())) break;
    const auto d = [&] {
      // Spatial Jacobian d tau / d u by central differences of a polynomial map.
      Eigen::Matrix2d jm;
      const double h = 1e-6 * (1.0 + v.norm());
      for (int c = 0; c < 2; ++c) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e[c] = h;
        jm.col(c) = (map_point(model, theta, v + e) - map_point(model, theta, v - e)) / (2.0 * h);
      }
      return jm;
    }();
    v -= d.lu().solve(f);
  }
  return v;
}

}  // namespace detail

/// Parameters of tau_{theta_j}^{-1} o tau_{theta_i}: the map from view-i
/// coordinates to view-j coordinates, so psi_i = psi_j o tau_{i->j}.
/// Exact for the group models; for HomographyApprox, whose family is not
/// closed under composition, the composite map is fitted by least squares
/// over the points of a grid of the given side.
inline Vec relative_transform(const TransformModel& model, const Vec& theta_i, const Vec& theta_j, int side = 64) {
  require_size(theta_i.size(), model.num_params(), "relative_transform theta_i");
  require_size(theta_j.size(), model.num_params(), "relative_transform theta_j");
  switch (model.kind()) {
    case TransformKind::Translation:
      return theta_i - theta_j;
    case TransformKind::ScaleTranslation: {
      if (theta_j[0] == 0.0) throw std::domain_error("relative_transform: singular transform");
      Vec r(3);
      r << theta_i[0] / theta_j[0], (theta_i[1] - theta_j[1]) / theta_j[0], (theta_i[2] - theta_j[2]) / theta_j[0];
      return r;
    }
    case TransformKind::Affine: {
      const Eigen::Matrix3d mj = detail::affine_matrix(model, theta_j);
      if (std::abs(mj.determinant()) < 1e-14) throw std::domain_error("relative_transform: singular transform");
      const Eigen::Matrix3d rel = mj.inverse() * detail::affine_matrix(model, theta_i);
      Vec r(6);
      r << rel(0, 0), rel(0, 1), rel(0, 2), rel(1, 0), rel(1, 1), rel(1, 2);
      return r;
    }
    case TransformKind::HomographyApprox: {
      const Eigen::Matrix3d aj = detail::affine_matrix(TransformModel(TransformKind::Affine), theta_j.head(6));
      if (std::abs(aj.determinant()) < 1e-14) throw std::domain_error("relative_transform: singular transform");
      const Grid grid(side);
      std::vector<Eigen::Vector2d> u(static_cast<std::size_t>(grid.size()));
      std::vector<Eigen::Vector2d> v(u.size());
      for (Eigen::Index k = 0; k < grid.size(); ++k) {
        u[k] = grid.coord(k);
        v[k] = detail::invert_point(model, theta_j, map_point(model, theta_i, u[k]));
      }
      // Gauss-Newton on sum_k ||tau_r(u_k) - v_k||^2 from the identity.
      Vec r = model.identity_params();
      for (int it = 0; it < 50; ++it) {
        Mat jtj = Mat::Zero(8, 8);
        Vec jtf = Vec::Zero(8);
        for (std::size_t k = 0; k < u.size(); ++k) {
          const Eigen::Vector2d f = map_point(model, r, u[k]) - v[k];
          const auto d = map_point_param_jacobian(model, r, u[k]);
          jtj += d.transpose() * d;
          jtf += d.transpose() * f;
        }
        const Vec step = jtj.ldlt().solve(jtf);
        r -= step;
        if (step.norm() <= 1e-15 * (1.0 + r.norm())) break;
      }
      return r;
    }
  }
  return {};
}

struct RegistrationError {
  double sigma = 0.0;
  int pairs = 0;
  int skipped = 0;  // pairs with zero-norm true relative parameters
};

/// Mean over ordered pairs i != j of
/// ||theta*_{i->j} - theta_{i->j}|| / ||theta_{i->j}||.
inline RegistrationError registration_error(const TransformModel& model, const std::vector<Vec>& estimated,
                                            const std::vector<Vec>& truth, int side = 64) {
  if (estimated.size() != truth.size()) throw DimensionError("registration_error: view counts differ");
  RegistrationError out;
  double sum = 0.0;
  const std::size_t l = truth.size();
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      if (i == j) continue;
      const Vec t = relative_transform(model, truth[i], truth[j], side);
      const double tn = t.norm();
      if (tn == 0.0) {
        ++out.skipped;
        continue;
      }
      sum += (relative_transform(model, estimated[i], estimated[j], side) - t).norm() / tn;
      ++out.pairs;
    }
  }
  out.sigma = out.pairs > 0 ? sum / out.pairs : 0.0;
  return out;
}

}  // namespace mvr
