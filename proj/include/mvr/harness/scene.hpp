#pragma once

#include "mvr/core.hpp"
#include "mvr/geometry/transform.hpp"
#include "mvr/geometry/warp.hpp"
#include "mvr/rng.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mvr {

/// Widths of the uniform parameter intervals [-delta/2, delta/2] around
/// the identity.
struct ParamSpread {
  double translation = 0.0;  // t1, t2 (pixels)
  double scale = 0.0;        // s, or the diagonal of the linear part
  double shear = 0.0;        // off-diagonal of the linear part
  double perspective = 0.0;  // theta7, theta8

  /// Half-widths per parameter of the given model.
  Vec half_widths(const TransformModel& model) const {
    const double t = 0.5 * translation, s = 0.5 * scale, a = 0.5 * shear, h = 0.5 * perspective;
    switch (model.kind()) {
      case TransformKind::Translation: return (Vec(2) << t, t).finished();
      case TransformKind::ScaleTranslation: return (Vec(3) << s, t, t).finished();
      case TransformKind::Affine: return (Vec(6) << s, a, t, a, s, t).finished();
      case TransformKind::HomographyApprox: return (Vec(8) << s, a, t, a, s, t, h, h).finished();
    }
    return {};
  }
};

struct SceneConfig {
  int side = 64;
  int views = 5;
  TransformModel model{TransformKind::Translation};
  ParamSpread spread;
  int occlusions = 0;            // rectangles per view
  double occlusion_min = 0.1;    // side length as a fraction of the grid side
  double occlusion_max = 0.25;
  double edge_width = 1.0;       // smoothing of rectangle edges in the reference (pixels)
  std::uint64_t seed = 1;
  std::optional<Vec> reference;  // replaces the procedural reference when set
};

struct SyntheticScene {
  Grid grid{8};
  Vec reference;                        // x0 in its own frame
  std::vector<TransformParams> params;  // true theta_j
  std::vector<Vec> foregrounds;         // true x_j
  std::vector<Vec> views;               // T(theta_j) reference + x_j
};

/// Smooth procedural test image in [0, 1]: a dim floor, Gaussian blobs and
/// soft-edged rectangles, all kept inside the central part of the grid.
inline Vec procedural_reference(const Grid& grid, std::uint64_t seed, double edge_width = 1.0) {
  CounterRng rng(seed, stream_id(Stream::Scene));
  const double s = grid.side();
  Vec img = Vec::Constant(grid.size(), 0.08);
  auto logistic = [&](double d) { return 1.0 / (1.0 + std::exp(-d / std::max(edge_width, 1e-3))); };
  for (int b = 0; b < 6; ++b) {
    const double cx = rng.uniform(-0.3, 0.3) * s, cy = rng.uniform(-0.3, 0.3) * s;
    const double sig = rng.uniform(0.04, 0.12) * s, amp = rng.uniform(0.2, 0.45);
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      const Eigen::Vector2d u = grid.coord(k);
      const double d2 = (u.x() - cx) * (u.x() - cx) + (u.y() - cy) * (u.y() - cy);
      img[k] += amp * std::exp(-0.5 * d2 / (sig * sig));
    }
  }
  for (int r = 0; r < 4; ++r) {
    const double cx = rng.uniform(-0.25, 0.25) * s, cy = rng.uniform(-0.25, 0.25) * s;
    const double hx = rng.uniform(0.05, 0.16) * s, hy = rng.uniform(0.05, 0.16) * s;
    const double amp = rng.uniform(0.15, 0.35) * (rng.rademacher() > 0 ? 1.0 : -0.6);
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      const Eigen::Vector2d u = grid.coord(k);
      const double inside_x = logistic(hx - std::abs(u.x() - cx));
      const double inside_y = logistic(hy - std::abs(u.y() - cy));
      img[k] += amp * inside_x * inside_y;
    }
  }
  return img.cwiseMax(0.0).cwiseMin(1.0);
}

/// theta_j drawn uniformly in identity +/- half widths, one stream per view.
inline std::vector<TransformParams> draw_params(const TransformModel& model, const ParamSpread& spread, int views,
                                                std::uint64_t seed) {
  const Vec id = model.identity_params();
  const Vec half = spread.half_widths(model);
  std::vector<TransformParams> out;
  for (int j = 0; j < views; ++j) {
    CounterRng rng(seed, stream_id(Stream::Params, static_cast<std::uint64_t>(j)));
    Vec theta = id;
    for (int i = 0; i < theta.size(); ++i) theta[i] += rng.uniform(-half[i], half[i]);
    out.emplace_back(model, theta);
  }
  return out;
}

/// Views T(theta_j) reference + x_j where x_j replaces random rectangles by
/// a random constant intensity. Errors if a parameter interval is not inside
/// `bounds` (when bounds are given).
inline SyntheticScene synth_scene(const SceneConfig& cfg, const std::vector<ParamBounds>* bounds = nullptr) {
  if (cfg.views < 1) throw std::invalid_argument("synth_scene: at least one view is required");
  SyntheticScene scene;
  scene.grid = Grid(cfg.side);
  const Grid& grid = scene.grid;
  if (cfg.reference) {
    require_size(cfg.reference->size(), grid.size(), "synth_scene reference");
    scene.reference = *cfg.reference;
  } else {
    scene.reference = procedural_reference(grid, cfg.seed, cfg.edge_width);
  }
  if (bounds) {
    if (static_cast<int>(bounds->size()) != cfg.views) throw DimensionError("synth_scene: one bound box per view");
    const Vec id = cfg.model.identity_params();
    const Vec half = cfg.spread.half_widths(cfg.model);
    for (const auto& b : *bounds) {
      if (!b.contains(id - half) || !b.contains(id + half)) {
        throw std::invalid_argument("synth_scene: parameter interval exceeds the bounds");
      }
    }
  }
  scene.params = draw_params(cfg.model, cfg.spread, cfg.views, cfg.seed);
  for (int j = 0; j < cfg.views; ++j) {
    const Vec warped = WarpOperator(grid, scene.params[j]).apply(scene.reference);
    Vec fg = Vec::Zero(grid.size());
    CounterRng rng(cfg.seed, stream_id(Stream::Occlusion, static_cast<std::uint64_t>(j)));
    for (int o = 0; o < cfg.occlusions; ++o) {
      const int w = std::max(1, static_cast<int>(std::lround(rng.uniform(cfg.occlusion_min, cfg.occlusion_max) * cfg.side)));
      const int h = std::max(1, static_cast<int>(std::lround(rng.uniform(cfg.occlusion_min, cfg.occlusion_max) * cfg.side)));
      const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.side - std::min(w, cfg.side) + 1)));
      const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.side - std::min(h, cfg.side) + 1)));
      const double value = rng.uniform();
      for (int r = r0; r < std::min(cfg.side, r0 + h); ++r) {
        for (int c = c0; c < std::min(cfg.side, c0 + w); ++c) {
          const Eigen::Index k = grid.index(r, c);
          fg[k] = value - warped[k];
        }
      }
    }
    scene.foregrounds.push_back(fg);
    scene.views.push_back(warped + fg);
  }
  return scene;
}

/// Gaussian measurement noise of standard deviation sigma for view j.
inline Vec gaussian_noise(Eigen::Index m, double sigma, std::uint64_t seed, int view) {
  Vec n(m);
  if (sigma == 0.0) return Vec::Zero(m);
  CounterRng rng(seed, stream_id(Stream::Noise, static_cast<std::uint64_t>(view)));
  for (Eigen::Index i = 0; i < m; ++i) n[i] = sigma * rng.normal();
  return n;
}

}  // namespace mvr
