#pragma once

#include "mvr/core.hpp"

#include <array>
#include <string>

namespace mvr {

/// Parametric coordinate maps tau_theta : R^2 -> R^2.
///
///   Translation       (t1, t2)            u + t
///   ScaleTranslation  (s, tx, ty)         s * u + t
///   Affine            (a1..a6)            (a1 u1 + a2 u2 + a3, a4 u1 + a5 u2 + a6)
///   HomographyApprox  (a1..a8)            affine(u) * (1 - a7 u1 - a8 u2)
///
/// HomographyApprox is the first-order expansion of the projective map and
/// stays polynomial in both u and theta.
enum class TransformKind { Translation, ScaleTranslation, Affine, HomographyApprox };

class TransformModel {
 public:
  static constexpr int kMaxParams = 8;

  constexpr TransformModel() = default;
  constexpr explicit TransformModel(TransformKind kind) : kind_(kind) {}

  constexpr TransformKind kind() const { return kind_; }

  constexpr int num_params() const {
    switch (kind_) {
      case TransformKind::Translation: return 2;
      case TransformKind::ScaleTranslation: return 3;
      case TransformKind::Affine: return 6;
      case TransformKind::HomographyApprox: return 8;
    }
    return 0;
  }

  Vec identity_params() const {
    switch (kind_) {
      case TransformKind::Translation: return Vec::Zero(2);
      case TransformKind::ScaleTranslation: return (Vec(3) << 1, 0, 0).finished();
      case TransformKind::Affine: return (Vec(6) << 1, 0, 0, 0, 1, 0).finished();
      case TransformKind::HomographyApprox: return (Vec(8) << 1, 0, 0, 0, 1, 0, 0, 0).finished();
    }
    return {};
  }

  std::string name() const {
    switch (kind_) {
      case TransformKind::Translation: return "translation";
      case TransformKind::ScaleTranslation: return "scale_translation";
      case TransformKind::Affine: return "affine";
      case TransformKind::HomographyApprox: return "homography";
    }
    return {};
  }

  bool operator==(const TransformModel&) const = default;

 private:
  TransformKind kind_ = TransformKind::Translation;
};

inline TransformModel parse_model(const std::string& name) {
  if (name == "translation") return TransformModel(TransformKind::Translation);
  if (name == "scale_translation" || name == "scaling") return TransformModel(TransformKind::ScaleTranslation);
  if (name == "affine") return TransformModel(TransformKind::Affine);
  if (name == "homography") return TransformModel(TransformKind::HomographyApprox);
  throw std::invalid_argument("unknown transform model '" + name + "'");
}

struct TransformParams {
  TransformModel model;
  Vec theta;

  TransformParams() = default;
  TransformParams(TransformModel m, Vec t) : model(m), theta(std::move(t)) {
    require_size(theta.size(), model.num_params(), "TransformParams");
  }
  static TransformParams identity(TransformModel m) { return {m, m.identity_params()}; }
};

/// Box constraint lower <= theta <= upper.
struct ParamBounds {
  Vec lower;
  Vec upper;

  ParamBounds() = default;
  ParamBounds(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
    require_size(upper.size(), lower.size(), "ParamBounds");
    if ((lower.array() > upper.array()).any()) {
      throw std::invalid_argument("ParamBounds: lower exceeds upper");
    }
  }

  /// Bounds collapsed onto a single point (parameters held fixed).
  static ParamBounds fixed(const Vec& theta) { return {theta, theta}; }

  /// Symmetric box identity +/- radius.
  static ParamBounds around_identity(const TransformModel& model, const Vec& radius) {
    require_size(radius.size(), model.num_params(), "ParamBounds radius");
    const Vec id = model.identity_params();
    return {id - radius, id + radius};
  }

  bool contains(const Vec& theta, double slack = 0.0) const {
    return theta.size() == lower.size() && (theta.array() >= lower.array() - slack).all() &&
           (theta.array() <= upper.array() + slack).all();
  }

  Vec project(const Vec& theta) const { return theta.cwiseMax(lower).cwiseMin(upper); }
};

/// tau_theta(u).
inline Eigen::Vector2d map_point(const TransformModel& model, const Vec& theta, const Eigen::Vector2d& u) {
  require_size(theta.size(), model.num_params(), "map_point theta");
  const double u1 = u.x();
  const double u2 = u.y();
  switch (model.kind()) {
    case TransformKind::Translation:
      return {u1 + theta[0], u2 + theta[1]};
    case TransformKind::ScaleTranslation:
      return {theta[0] * u1 + theta[1], theta[0] * u2 + theta[2]};
    case TransformKind::Affine:
      return {theta[0] * u1 + theta[1] * u2 + theta[2], theta[3] * u1 + theta[4] * u2 + theta[5]};
    case TransformKind::HomographyApprox: {
      const double w = 1.0 - theta[6] * u1 - theta[7] * u2;
      return {(theta[0] * u1 + theta[1] * u2 + theta[2]) * w, (theta[3] * u1 + theta[4] * u2 + theta[5]) * w};
    }
  }
  return u;
}

/// Partial derivatives of tau_theta(u) with respect to theta: row 0 holds
/// d tau_1 / d theta_i, row 1 holds d tau_2 / d theta_i. Only the first
/// num_params() columns are meaningful.
inline Eigen::Matrix<double, 2, TransformModel::kMaxParams> map_point_param_jacobian(
    const TransformModel& model, const Vec& theta, const Eigen::Vector2d& u) {
  Eigen::Matrix<double, 2, TransformModel::kMaxParams> d = Eigen::Matrix<double, 2, TransformModel::kMaxParams>::Zero();
  const double u1 = u.x();
  const double u2 = u.y();
  switch (model.kind()) {
    case TransformKind::Translation:
      d(0, 0) = 1.0;
      d(1, 1) = 1.0;
      break;
    case TransformKind::ScaleTranslation:
      d(0, 0) = u1;
      d(1, 0) = u2;
      d(0, 1) = 1.0;
      d(1, 2) = 1.0;
      break;
    case TransformKind::Affine:
      d(0, 0) = u1;
      d(0, 1) = u2;
      d(0, 2) = 1.0;
      d(1, 3) = u1;
      d(1, 4) = u2;
      d(1, 5) = 1.0;
      break;
    case TransformKind::HomographyApprox: {
      const double w = 1.0 - theta[6] * u1 - theta[7] * u2;
      const double a1 = theta[0] * u1 + theta[1] * u2 + theta[2];
      const double a2 = theta[3] * u1 + theta[4] * u2 + theta[5];
      d(0, 0) = u1 * w;
      d(0, 1) = u2 * w;
      d(0, 2) = w;
      d(1, 3) = u1 * w;
      d(1, 4) = u2 * w;
      d(1, 5) = w;
      d(0, 6) = -u1 * a1;
      d(0, 7) = -u2 * a1;
      d(1, 6) = -u1 * a2;
      d(1, 7) = -u2 * a2;
      break;
    }
  }
  return d;
}

}  // namespace mvr
