#pragma once

#include "mvr/core.hpp"
#include "mvr/operators/linear_operator.hpp"
#include "mvr/rng.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

namespace mvr {

inline LinearOperator make_identity_op(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("make_identity_op: n must be >= 1");
  auto copy = [](ConstVecRef x, VecRef out) { out = x; };
  return LinearOperator(n, n, copy, copy, 1.0, "identity");
}

namespace detail {

using Complex = std::complex<double>;

/// Unnormalised forward 2D DFT of a row-major side x side array, in place.
inline void fft2_forward(std::vector<Complex>& data, int side) {
  thread_local Eigen::FFT<double> fft;
  std::vector<Complex> in(static_cast<std::size_t>(side));
  std::vector<Complex> out;
  for (int r = 0; r < side; ++r) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(r) * side, side, in.begin());
    fft.fwd(out, in);
    std::copy_n(out.begin(), side, data.begin() + static_cast<std::ptrdiff_t>(r) * side);
  }
  for (int c = 0; c < side; ++c) {
    for (int r = 0; r < side; ++r) in[r] = data[static_cast<std::size_t>(r) * side + c];
    fft.fwd(out, in);
    for (int r = 0; r < side; ++r) data[static_cast<std::size_t>(r) * side + c] = out[r];
  }
}

}  // namespace detail

/// One real measurement row of the half-plane DFT: the real or imaginary part
/// of frequency `freq` (row-major index k2 * side + k1), scaled by `scale`.
struct HalfPlaneRow {
  Eigen::Index freq = 0;
  bool imaginary = false;
  double scale = 0.0;
};

/// Canonical real rows of the half-plane DFT of a side x side real image.
///
/// Frequencies are visited in increasing row-major index; a frequency is kept
/// when its index does not exceed that of its conjugate (-k mod side). Each
/// kept pair contributes a real row then an imaginary row, each scaled by
/// sqrt(2/n); the four self-conjugate frequencies (DC and Nyquist) contribute
/// only a real row scaled by 1/sqrt(n). The result has exactly n rows and the
/// full stack is an orthogonal n x n matrix.
inline std::vector<HalfPlaneRow> half_plane_rows(const Grid& grid) {
  const int side = grid.side();
  const double n = static_cast<double>(grid.size());
  std::vector<HalfPlaneRow> rows;
  rows.reserve(static_cast<std::size_t>(grid.size()));
  for (int k2 = 0; k2 < side; ++k2) {
    for (int k1 = 0; k1 < side; ++k1) {
      const Eigen::Index idx = grid.index(k2, k1);
      const Eigen::Index conj = grid.index((side - k2) % side, (side - k1) % side);
      if (idx > conj) continue;
      if (idx == conj) {
        rows.push_back({idx, false, 1.0 / std::sqrt(n)});
      } else {
        const double s = std::sqrt(2.0 / n);
        rows.push_back({idx, false, s});
        rows.push_back({idx, true, s});
      }
    }
  }
  return rows;
}

/// Spread-spectrum sensing: Rademacher pre-modulation followed by m randomly
/// chosen real rows of the half-plane DFT (see half_plane_rows). `m` counts
/// real rows. The selected rows are orthonormal, so A A^T = I.
///
/// Deterministic in (seed, view): the modulation and the row subset come from
/// independent counter-based streams.
inline LinearOperator make_spread_spectrum_op(const Grid& grid, Eigen::Index m, std::uint64_t seed,
                                              std::uint64_t view = 0) {
  const Eigen::Index n = grid.size();
  if (m < 1 || m > n) {
    throw std::invalid_argument("make_spread_spectrum_op: m must lie in [1, " + std::to_string(n) +
                                "], got " + std::to_string(m));
  }
  struct Plan {
    int side;
    Vec modulation;
    std::vector<HalfPlaneRow> rows;
  };
  auto plan = std::make_shared<Plan>();
  plan->side = grid.side();
  plan->modulation.resize(n);
  CounterRng mod_rng(seed, stream_id(Stream::Modulation, view));
  for (Eigen::Index i = 0; i < n; ++i) plan->modulation[i] = mod_rng.rademacher();

  const auto all_rows = half_plane_rows(grid);
  CounterRng pick_rng(seed, stream_id(Stream::Sampling, view));
  auto chosen = pick_rng.sample_without_replacement(all_rows.size(), static_cast<std::size_t>(m));
  std::sort(chosen.begin(), chosen.end());
  for (auto idx : chosen) plan->rows.push_back(all_rows[idx]);

  auto forward = [plan](ConstVecRef x, VecRef out) {
    std::vector<detail::Complex> buf(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) buf[i] = plan->modulation[i] * x[i];
    detail::fft2_forward(buf, plan->side);
    for (std::size_t r = 0; r < plan->rows.size(); ++r) {
      const auto& row = plan->rows[r];
      const auto& z = buf[static_cast<std::size_t>(row.freq)];
      out[static_cast<Eigen::Index>(r)] = row.scale * (row.imaginary ? z.imag() : z.real());
    }
  };
  auto adjoint = [plan](ConstVecRef v, VecRef out) {
    // Row value = Re(w * X[f]) with w = scale (real part) or -i * scale
    // (imaginary part); the adjoint is Re(DFT(G)) with G[f] += w * v.
    const std::size_t n_px = static_cast<std::size_t>(out.size());
    std::vector<detail::Complex> buf(n_px, detail::Complex(0.0, 0.0));
    for (std::size_t r = 0; r < plan->rows.size(); ++r) {
      const auto& row = plan->rows[r];
      const double val = row.scale * v[static_cast<Eigen::Index>(r)];
      buf[static_cast<std::size_t>(row.freq)] += row.imaginary ? detail::Complex(0.0, -val) : detail::Complex(val, 0.0);
    }
    detail::fft2_forward(buf, plan->side);
    for (std::size_t i = 0; i < n_px; ++i) out[static_cast<Eigen::Index>(i)] = plan->modulation[i] * buf[i].real();
  };
  return LinearOperator(m, n, forward, adjoint, 1.0, "spread_spectrum");
}

/// Block-mean blur followed by decimation: each low-resolution pixel is the
/// mean of a factor x factor block. A A^T = I / factor^2.
inline LinearOperator make_blur_downsample_op(const Grid& grid, int factor = 2) {
  const int side = grid.side();
  if (factor < 1 || side % factor != 0) {
    throw std::invalid_argument("make_blur_downsample_op: side " + std::to_string(side) +
                                " is not divisible by factor " + std::to_string(factor));
  }
  const int lo = side / factor;
  const double w = 1.0 / (static_cast<double>(factor) * factor);
  auto forward = [side, lo, factor, w](ConstVecRef x, VecRef out) {
    out.setZero();
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        out[static_cast<Eigen::Index>(r / factor) * lo + c / factor] += w * x[static_cast<Eigen::Index>(r) * side + c];
      }
    }
  };
  auto adjoint = [side, lo, factor, w](ConstVecRef v, VecRef out) {
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        out[static_cast<Eigen::Index>(r) * side + c] = w * v[static_cast<Eigen::Index>(r / factor) * lo + c / factor];
      }
    }
  };
  return LinearOperator(static_cast<Eigen::Index>(lo) * lo, grid.size(), forward, adjoint, w, "blur_downsample");
}

}  // namespace mvr
