#pragma once

#include "mvr/core.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace mvr {

enum class WaveletFamily { Haar, Daubechies8 };

inline WaveletFamily parse_wavelet(const std::string& name) {
  if (name == "haar") return WaveletFamily::Haar;
  if (name == "daub8" || name == "db8" || name == "daubechies8") return WaveletFamily::Daubechies8;
  throw std::invalid_argument("unknown wavelet '" + name + "'");
}

/// Lowpass reconstruction filter of the orthonormal family. Daubechies8 is
/// the 8-tap filter (four vanishing moments).
inline std::span<const double> wavelet_lowpass(WaveletFamily family) {
  static constexpr std::array<double, 2> haar = {0.70710678118654752440, 0.70710678118654752440};
  static constexpr std::array<double, 8> daub8 = {
      0.23037781330889650086,  0.71484657055291564709,  0.63088076792985890788,  -0.027983769416859854211,
      -0.18703481171909308408, 0.030841381835560763627, 0.032883011666885199735, -0.010597401785069032105};
  if (family == WaveletFamily::Haar) return haar;
  return daub8;
}

/// Separable orthonormal 2D DWT with periodic extension, Mallat layout
/// (coarse approximation in the top-left corner). Orthonormal, so the
/// inverse is the transpose.
class OrthoWavelet {
 public:
  OrthoWavelet() = default;
  OrthoWavelet(WaveletFamily family, int side, int levels) : family_(family), side_(side), levels_(levels) {
    if (levels < 1) throw std::invalid_argument("OrthoWavelet: levels must be >= 1");
    if (side < 2 || side % (1 << levels) != 0) {
      throw std::invalid_argument("OrthoWavelet: side " + std::to_string(side) + " cannot be transformed over " +
                                  std::to_string(levels) + " levels");
    }
    const auto h = wavelet_lowpass(family);
    low_.assign(h.begin(), h.end());
    const std::size_t len = low_.size();
    high_.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
      high_[k] = ((k % 2 == 0) ? 1.0 : -1.0) * low_[len - 1 - k];
    }
  }

  /// Coarsest approximation of at least 4 x 4 pixels.
  static int default_levels(int side) {
    int levels = 0;
    while (side % (2 << levels) == 0 && (side >> (levels + 1)) >= 4) ++levels;
    return std::max(levels, 1);
  }

  WaveletFamily family() const { return family_; }
  int side() const { return side_; }
  int levels() const { return levels_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(side_) * side_; }

  void forward(ConstVecRef image, VecRef coeffs) const {
    require_size(image.size(), size(), "OrthoWavelet::forward input");
    require_size(coeffs.size(), size(), "OrthoWavelet::forward output");
    coeffs = image;
    std::vector<double> line(static_cast<std::size_t>(side_));
    std::vector<double> tmp(static_cast<std::size_t>(side_));
    for (int lev = 0; lev < levels_; ++lev) {
      const int s = side_ >> lev;
      for (int r = 0; r < s; ++r) {
        for (int c = 0; c < s; ++c) line[c] = coeffs[static_cast<Eigen::Index>(r) * side_ + c];
        analyze(line.data(), tmp.data(), s);
        for (int c = 0; c < s; ++c) coeffs[static_cast<Eigen::Index>(r) * side_ + c] = tmp[c];
      }
      for (int c = 0; c < s; ++c) {
        for (int r = 0; r < s; ++r) line[r] = coeffs[static_cast<Eigen::Index>(r) * side_ + c];
        analyze(line.data(), tmp.data(), s);
        for (int r = 0; r < s; ++r) coeffs[static_cast<Eigen::Index>(r) * side_ + c] = tmp[r];
      }
    }
  }

  Vec forward(ConstVecRef image) const {
    Vec out(size());
    forward(image, out);
    return out;
  }

  void inverse(ConstVecRef coeffs, VecRef image) const {
    require_size(coeffs.size(), size(), "OrthoWavelet::inverse input");
    require_size(image.size(), size(), "OrthoWavelet::inverse output");
    image = coeffs;
    std::vector<double> line(static_cast<std::size_t>(side_));
    std::vector<double> tmp(static_cast<std::size_t>(side_));
    for (int lev = levels_ - 1; lev >= 0; --lev) {
      const int s = side_ >> lev;
      for (int c = 0; c < s; ++c) {
        for (int r = 0; r < s; ++r) line[r] = image[static_cast<Eigen::Index>(r) * side_ + c];
        synthesize(line.data(), tmp.data(), s);
        for (int r = 0; r < s; ++r) image[static_cast<Eigen::Index>(r) * side_ + c] = tmp[r];
      }
      for (int r = 0; r < s; ++r) {
        for (int c = 0; c < s; ++c) line[c] = image[static_cast<Eigen::Index>(r) * side_ + c];
        synthesize(line.data(), tmp.data(), s);
        for (int c = 0; c < s; ++c) image[static_cast<Eigen::Index>(r) * side_ + c] = tmp[c];
      }
    }
  }

  Vec inverse(ConstVecRef coeffs) const {
    Vec out(size());
    inverse(coeffs, out);
    return out;
  }

 private:
  // a[i] = sum_k h[k] x[(2i+k) mod s], d[i] = sum_k g[k] x[(2i+k) mod s]
  void analyze(const double* x, double* out, int s) const {
    const int half = s / 2;
    const int len = static_cast<int>(low_.size());
    for (int i = 0; i < half; ++i) {
      double a = 0.0;
      double d = 0.0;
      for (int k = 0; k < len; ++k) {
        const double v = x[(2 * i + k) % s];
        a += low_[k] * v;
        d += high_[k] * v;
      }
      out[i] = a;
      out[half + i] = d;
    }
  }

  void synthesize(const double* in, double* x, int s) const {
    const int half = s / 2;
    const int len = static_cast<int>(low_.size());
    std::fill(x, x + s, 0.0);
    for (int i = 0; i < half; ++i) {
      const double a = in[i];
      const double d = in[half + i];
      for (int k = 0; k < len; ++k) x[(2 * i + k) % s] += low_[k] * a + high_[k] * d;
    }
  }

  WaveletFamily family_ = WaveletFamily::Haar;
  int side_ = 0;
  int levels_ = 0;
  std::vector<double> low_;
  std::vector<double> high_;
};

/// Block-diagonal extension D of a wavelet over `blocks` images laid out
/// back to back. analysis() is D^T, synthesis() is D, and D D^T = I.
class FrameOperator {
 public:
  FrameOperator() = default;
  FrameOperator(OrthoWavelet wavelet, int blocks) : wavelet_(std::move(wavelet)), blocks_(blocks) {}

  const OrthoWavelet& wavelet() const { return wavelet_; }
  int blocks() const { return blocks_; }
  Eigen::Index block_size() const { return wavelet_.size(); }
  Eigen::Index size() const { return blocks_ * block_size(); }

  void analysis(ConstVecRef x, VecRef alpha) const {
    require_size(x.size(), size(), "FrameOperator::analysis input");
    require_size(alpha.size(), size(), "FrameOperator::analysis output");
    for (int b = 0; b < blocks_; ++b) {
      auto out = alpha.segment(b * block_size(), block_size());
      wavelet_.forward(x.segment(b * block_size(), block_size()), out);
    }
  }
  Vec analysis(ConstVecRef x) const {
    Vec out(size());
    analysis(x, out);
    return out;
  }

  void synthesis(ConstVecRef alpha, VecRef x) const {
    require_size(alpha.size(), size(), "FrameOperator::synthesis input");
    require_size(x.size(), size(), "FrameOperator::synthesis output");
    for (int b = 0; b < blocks_; ++b) {
      auto out = x.segment(b * block_size(), block_size());
      wavelet_.inverse(alpha.segment(b * block_size(), block_size()), out);
    }
  }
  Vec synthesis(ConstVecRef alpha) const {
    Vec out(size());
    synthesis(alpha, out);
    return out;
  }

 private:
  OrthoWavelet wavelet_;
  int blocks_ = 0;
};

}  // namespace mvr
