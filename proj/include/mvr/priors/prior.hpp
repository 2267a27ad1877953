#pragma once

#include "mvr/core.hpp"
#include "mvr/priors/huber.hpp"
#include "mvr/priors/tv.hpp"
#include "mvr/priors/wavelet.hpp"

#include <string>
#include <vector>

namespace mvr {

/// prox of lambda ||D^T x||_1 for an orthonormal block frame:
/// z + D (soft(D^T z, lambda) - D^T z).
inline Vec prox_l1_analysis(const FrameOperator& frame, ConstVecRef z, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("prox_l1_analysis: lambda must be >= 0");
  if (lambda == 0.0) return z;
  Vec alpha = frame.analysis(z);
  for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha[i] = soft_threshold(alpha[i], lambda);
  return frame.synthesis(alpha);
}

enum class PriorKind { L1Analysis, TotalVariation };

inline PriorKind parse_prior(const std::string& name) {
  if (name == "l1" || name == "l1_analysis") return PriorKind::L1Analysis;
  if (name == "tv") return PriorKind::TotalVariation;
  throw std::invalid_argument("unknown prior '" + name + "'");
}

/// Convex image prior f(x) = sum_b w_b g(x_b) over the images of a stack,
/// where g is either the l1 norm of orthonormal wavelet coefficients or the
/// isotropic TV. Block 0 is the background.
class Prior {
 public:
  Prior() = default;

  static Prior l1_analysis(FrameOperator frame, std::vector<double> weights = {}) {
    Prior p;
    p.kind_ = PriorKind::L1Analysis;
    p.side_ = frame.wavelet().side();
    p.blocks_ = frame.blocks();
    p.frame_ = std::move(frame);
    p.set_weights(std::move(weights));
    return p;
  }

  static Prior total_variation(int side, int blocks, std::vector<double> weights = {}) {
    Prior p;
    p.kind_ = PriorKind::TotalVariation;
    p.side_ = side;
    p.blocks_ = blocks;
    p.set_weights(std::move(weights));
    return p;
  }

  PriorKind kind() const { return kind_; }
  int side() const { return side_; }
  int blocks() const { return blocks_; }
  Eigen::Index block_size() const { return static_cast<Eigen::Index>(side_) * side_; }
  Eigen::Index size() const { return blocks_ * block_size(); }
  const FrameOperator& frame() const { return frame_; }
  double weight(int b) const { return weights_[static_cast<std::size_t>(b)]; }
  const std::vector<double>& weights() const { return weights_; }

  double value(ConstVecRef x) const {
    require_size(x.size(), size(), "Prior::value");
    double sum = 0.0;
    if (kind_ == PriorKind::L1Analysis) {
      Vec alpha(block_size());
      for (int b = 0; b < blocks_; ++b) {
        frame_.wavelet().forward(x.segment(b * block_size(), block_size()), alpha);
        sum += weight(b) * alpha.lpNorm<1>();
      }
    } else {
      for (int b = 0; b < blocks_; ++b) sum += weight(b) * tv_value(x.segment(b * block_size(), block_size()), side_);
    }
    return sum;
  }

  /// argmin_p lambda f(p) + ||p - z||^2 / 2. Exact for L1Analysis; TV uses
  /// the dual iteration with the given cap and gap tolerance.
  Vec prox(ConstVecRef z, double lambda, int tv_iterations = 200, double tv_gap_tol = 1e-8) const {
    require_size(z.size(), size(), "Prior::prox");
    if (lambda < 0.0) throw std::invalid_argument("Prior::prox: lambda must be >= 0");
    Vec out(size());
    for (int b = 0; b < blocks_; ++b) {
      const double lam = lambda * weight(b);
      auto zb = z.segment(b * block_size(), block_size());
      if (kind_ == PriorKind::L1Analysis) {
        Vec alpha = frame_.wavelet().forward(zb);
        for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha[i] = soft_threshold(alpha[i], lam);
        out.segment(b * block_size(), block_size()) = frame_.wavelet().inverse(alpha);
      } else {
        out.segment(b * block_size(), block_size()) = tv_prox(zb, side_, lam, tv_iterations, tv_gap_tol).x;
      }
    }
    return out;
  }

 private:
  void set_weights(std::vector<double> weights) {
    if (weights.empty()) weights.assign(static_cast<std::size_t>(blocks_), 1.0);
    if (static_cast<int>(weights.size()) != blocks_) throw DimensionError("Prior: one weight per image is required");
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("Prior: weights must be >= 0");
    }
    weights_ = std::move(weights);
  }

  PriorKind kind_ = PriorKind::L1Analysis;
  int side_ = 0;
  int blocks_ = 0;
  FrameOperator frame_;
  std::vector<double> weights_;
};

}  // namespace mvr
