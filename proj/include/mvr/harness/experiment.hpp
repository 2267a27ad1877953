#pragma once

#include "mvr/core.hpp"
#include "mvr/geometry/kernel.hpp"
#include "mvr/harness/config_file.hpp"
#include "mvr/harness/pgm.hpp"
#include "mvr/harness/scene.hpp"
#include "mvr/metrics/metrics.hpp"
#include "mvr/operators/sensing.hpp"
#include "mvr/solver/algorithm.hpp"
#include "mvr/solver/auto_kappa.hpp"
#include "mvr/solver/baselines.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mvr {

enum class ExperimentMode { Synth, Align, Cs, Sr };

inline ExperimentMode parse_mode(const std::string& s) {
  if (s == "synth") return ExperimentMode::Synth;
  if (s == "align") return ExperimentMode::Align;
  if (s == "cs") return ExperimentMode::Cs;
  if (s == "sr") return ExperimentMode::Sr;
  throw ConfigError("unknown mode '" + s + "'");
}

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::Align;
  SceneConfig scene;           // scene.side is the (high-resolution) image side
  ParamSpread bound_radius{20.0, 0.2, 0.2, 0.01};  // box half-widths around the identity
  double sampling_ratio = 0.3; // cs: m / n real rows per view
  int factor = 2;              // sr: downsampling factor
  double sigma = 0.0;          // measurement noise
  KernelKind kernel = KernelKind::Keys;

  PriorKind prior = PriorKind::L1Analysis;
  WaveletFamily prior_wavelet = WaveletFamily::Haar;
  WaveletFamily move_wavelet = WaveletFamily::Haar;
  int levels = 0;  // 0: OrthoWavelet::default_levels
  double foreground_weight = 1.0;

  SolverConfig solver;              // bounds are filled from bound_radius
  double gamma0_multiplier = 20.0;  // gamma_x^0 = multiplier * kappa unless gamma0 is set
  std::optional<double> gamma0;
  bool auto_kappa = false;
  AutoKappaOptions kappa_search;

  bool baselines = false;
  BaselineOptions baseline_options;

  std::string out_dir;
  std::string trace_path;  // defaults to <out_dir>/trace.csv
  bool trace_timing = false;

  std::vector<ParamBounds> bounds() const {
    const Vec r = bound_radius.half_widths(scene.model);
    return std::vector<ParamBounds>(static_cast<std::size_t>(scene.views),
                                    ParamBounds::around_identity(scene.model, r));
  }
};

inline Step1Method parse_step1(const std::string& s) {
  if (s == "auto") return Step1Method::Auto;
  if (s == "fb" || s == "fista") return Step1Method::ForwardBackward;
  if (s == "pd" || s == "primal_dual") return Step1Method::PrimalDual;
  if (s == "gfb") return Step1Method::GeneralizedForwardBackward;
  throw ConfigError("unknown step1 method '" + s + "'");
}

/// Builds the experiment description from flat keys; unknown keys are left
/// for the caller to report via unused_keys().
inline ExperimentConfig experiment_config_from(const KeyValueConfig& kv) {
  ExperimentConfig c;
  c.mode = parse_mode(kv.get("mode", "align"));
  c.scene.side = kv.get_int("side", 64);
  c.scene.views = kv.get_int("views", 5);
  c.scene.model = parse_model(kv.get("model", "translation"));
  c.scene.spread.translation = kv.get_double("delta_t", 8.0);
  c.scene.spread.scale = kv.get_double("delta_s", 0.0);
  c.scene.spread.shear = kv.get_double("delta_shear", 0.0);
  c.scene.spread.perspective = kv.get_double("delta_persp", 0.0);
  c.scene.occlusions = kv.get_int("occlusions", 0);
  c.scene.occlusion_min = kv.get_double("occlusion_min", 0.1);
  c.scene.occlusion_max = kv.get_double("occlusion_max", 0.25);
  c.scene.edge_width = kv.get_double("edge_width", 1.0);
  c.scene.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
  if (const std::string ref = kv.get("reference", ""); !ref.empty()) {
    const PgmImage img = read_pgm(ref);
    if (img.width != c.scene.side || img.height != c.scene.side) {
      throw ConfigError("reference image must be " + std::to_string(c.scene.side) + " x " +
                        std::to_string(c.scene.side));
    }
    c.scene.reference = img.pixels;
  }
  c.bound_radius.translation = kv.get_double("bound_t", 20.0);
  c.bound_radius.scale = kv.get_double("bound_s", 0.2);
  c.bound_radius.shear = kv.get_double("bound_shear", 0.2);
  c.bound_radius.perspective = kv.get_double("bound_persp", 0.01);
  // half_widths() halves its input; bounds are given as radii.
  c.bound_radius.translation *= 2.0;
  c.bound_radius.scale *= 2.0;
  c.bound_radius.shear *= 2.0;
  c.bound_radius.perspective *= 2.0;

  c.sampling_ratio = kv.get_double("sampling_ratio", 0.3);
  c.factor = kv.get_int("factor", 2);
  c.sigma = kv.get_double("sigma", 0.0);
  c.kernel = parse_kernel(kv.get("kernel", "keys"));
  c.prior = parse_prior(kv.get("prior", c.mode == ExperimentMode::Sr ? "tv" : "l1"));
  c.prior_wavelet = parse_wavelet(kv.get("prior_wavelet", "haar"));
  c.move_wavelet = parse_wavelet(kv.get("move_wavelet", "haar"));
  c.levels = kv.get_int("levels", 0);
  c.foreground_weight = kv.get_double("foreground_weight", 1.0);

  SolverConfig& s = c.solver;
  const std::string kappa = kv.get("kappa", "100");
  c.auto_kappa = kappa == "auto";
  if (!c.auto_kappa) s.kappa = kv.get_double("kappa", 100.0);
  c.kappa_search.kappa_min = kv.get_double("kappa_min", c.kappa_search.kappa_min);
  c.kappa_search.kappa_max = kv.get_double("kappa_max", c.kappa_search.kappa_max);
  c.kappa_search.initial = kv.get_double("kappa_initial", c.kappa_search.initial);
  s.gamma_theta = kv.get_double("gamma_theta", s.gamma_theta);
  const std::string g0 = kv.get("gamma0", "");
  if (g0 == "auto") {
    s.auto_gamma0 = true;
  } else if (!g0.empty()) {
    c.gamma0 = kv.get_double("gamma0", 0.0);
  }
  c.gamma0_multiplier = kv.get_double("gamma0_mult", c.gamma0_multiplier);
  s.gamma_x.decay = kv.get_double("gamma_decay", s.gamma_x.decay);
  s.gamma_x.floor = kv.get_double("gamma_floor", s.gamma_x.floor);
  s.mu = kv.get_double("mu", s.mu);
  s.k_max = kv.get_int("k_max", s.k_max);
  s.tol_x = kv.get_double("tol_x", s.tol_x);
  s.tol_theta = kv.get_double("tol_theta", s.tol_theta);
  s.step1 = parse_step1(kv.get("step1", "auto"));
  s.inner_max_iterations = kv.get_int("inner_max_iterations", s.inner_max_iterations);
  s.inner_rel_tol = kv.get_double("inner_rel_tol", s.inner_rel_tol);
  s.power_iterations = kv.get_int("power_iterations", s.power_iterations);
  s.tv_iterations = kv.get_int("tv_iterations", s.tv_iterations);
  s.backtrack_cap = kv.get_int("backtrack_cap", s.backtrack_cap);
  s.threads = kv.get_int("threads", s.threads);
  s.assert_decrease = kv.get_bool("assert_decrease", s.assert_decrease);

  c.baselines = kv.get_bool("baselines", false);
  c.baseline_options.max_iterations = kv.get_int("baseline_iterations", c.baseline_options.max_iterations);
  c.baseline_options.step = kv.get_double("baseline_step", c.baseline_options.step);
  c.out_dir = kv.get("out", "");
  c.trace_path = kv.get("trace", "");
  c.trace_timing = kv.get_bool("trace_timing", false);
  return c;
}

/// Bicubic (Keys) upsampling of a low-resolution frame whose pixel (I, J)
/// covers high-resolution pixels factor*I .. factor*I + factor - 1. Edges
/// are extended by replication.
inline Vec bicubic_upsample(ConstVecRef low, int low_side, int factor) {
  require_size(low.size(), static_cast<Eigen::Index>(low_side) * low_side, "bicubic_upsample");
  const int side = low_side * factor;
  const double off = 0.5 * (factor - 1);
  auto at = [&](int r, int c) {
    r = std::clamp(r, 0, low_side - 1);
    c = std::clamp(c, 0, low_side - 1);
    return low[static_cast<Eigen::Index>(r) * low_side + c];
  };
  Vec out(static_cast<Eigen::Index>(side) * side);
  for (int r = 0; r < side; ++r) {
    const double pr = (r - off) / factor;
    const int r0 = static_cast<int>(std::floor(pr));
    for (int c = 0; c < side; ++c) {
      const double pc = (c - off) / factor;
      const int c0 = static_cast<int>(std::floor(pc));
      double acc = 0.0;
      for (int b = -1; b <= 2; ++b) {
        const double wy = keys_kernel(pr - (r0 + b));
        for (int a = -1; a <= 2; ++a) acc += wy * keys_kernel(pc - (c0 + a)) * at(r0 + b, c0 + a);
      }
      out[static_cast<Eigen::Index>(r) * side + c] = acc;
    }
  }
  return out;
}

struct ExperimentResult {
  ExperimentConfig config;
  SyntheticScene scene;
  Problem problem;
  std::vector<TransformParams> theta0;
  std::optional<Algorithm1Result> run;
  std::optional<AutoKappaResult> kappa_search;
  std::optional<BaselineResult> bpdn;
  std::optional<BaselineResult> group;
  std::vector<std::pair<std::string, double>> metrics;

  double metric(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
      if (k == name) return v;
    }
    throw std::out_of_range("no metric '" + name + "'");
  }
};

/// Scene, sensing operators and measurements for the configured mode.
inline ExperimentResult prepare_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res;
  res.config = cfg;
  const auto bounds = cfg.bounds();
  res.scene = synth_scene(cfg.scene, &bounds);
  const Grid& grid = res.scene.grid;
  const int l = cfg.scene.views;

  Problem& p = res.problem;
  p.grid = grid;
  p.model = cfg.scene.model;
  p.kernel = cfg.kernel;
  for (int j = 0; j < l; ++j) {
    LinearOperator op;
    switch (cfg.mode) {
      case ExperimentMode::Cs: {
        const auto m = static_cast<Eigen::Index>(std::lround(cfg.sampling_ratio * static_cast<double>(grid.size())));
        op = make_spread_spectrum_op(grid, m, cfg.scene.seed, static_cast<std::uint64_t>(j));
        break;
      }
      case ExperimentMode::Sr: op = make_blur_downsample_op(grid, cfg.factor); break;
      default: op = make_identity_op(grid.size());
    }
    Vec y = op.apply(res.scene.views[j]);
    y += gaussian_noise(y.size(), cfg.sigma, cfg.scene.seed, j);
    p.data.ops.push_back(std::move(op));
    p.data.y.push_back(std::move(y));
  }
  const int levels = cfg.levels > 0 ? cfg.levels : OrthoWavelet::default_levels(grid.side());
  p.move_frame = FrameOperator(OrthoWavelet(cfg.move_wavelet, grid.side(), levels), l + 1);
  std::vector<double> weights(static_cast<std::size_t>(l + 1), cfg.foreground_weight);
  weights[0] = 1.0;
  if (cfg.prior == PriorKind::TotalVariation) {
    p.prior = Prior::total_variation(grid.side(), l + 1, weights);
  } else {
    p.prior = Prior::l1_analysis(FrameOperator(OrthoWavelet(cfg.prior_wavelet, grid.side(), levels), l + 1), weights);
  }
  res.theta0.assign(static_cast<std::size_t>(l), TransformParams::identity(cfg.scene.model));
  return res;
}

inline SolverConfig solver_config_for(const ExperimentConfig& cfg, double kappa) {
  SolverConfig s = cfg.solver;
  s.kappa = kappa;
  s.bounds = cfg.bounds();
  if (!s.auto_gamma0) s.gamma_x.initial = cfg.gamma0 ? *cfg.gamma0 : cfg.gamma0_multiplier * kappa;
  return s;
}

namespace detail {

inline void add_trace_metrics(ExperimentResult& res, const Algorithm1Result& run) {
  const TraceCheck chk = check_trace(run.trace, res.config.solver.decrease_tol);
  auto& m = res.metrics;
  m.emplace_back("kappa", run.trace.kappa);
  m.emplace_back("gamma0", run.gamma0);
  m.emplace_back("first_step_ratio", run.first_step_ratio);
  m.emplace_back("density_first", run.first_step_density);
  m.emplace_back("density_final", run.final_density);
  m.emplace_back("iterations", static_cast<double>(run.trace.records.size()));
  m.emplace_back("converged", run.trace.converged ? 1.0 : 0.0);
  m.emplace_back("L_initial", run.trace.initial_objective);
  m.emplace_back("L_final", run.trace.final_objective());
  m.emplace_back("monotone", chk.monotone ? 1.0 : 0.0);
  m.emplace_back("sufficient_decrease", chk.sufficient_decrease ? 1.0 : 0.0);
  m.emplace_back("telescoping", chk.telescoping ? 1.0 : 0.0);
  m.emplace_back("increment_sum", chk.increment_sum);
  m.emplace_back("decrease_budget", chk.budget);
  m.emplace_back("final_increment", chk.final_increment);
  int i_max = 0;
  int skipped = 0;
  int fallbacks = 0;
  for (const auto& r : run.trace.records) {
    i_max = std::max(i_max, r.i_max);
    skipped += r.step2_skipped;
    fallbacks += r.step1_fallback ? 1 : 0;
  }
  m.emplace_back("backtrack_max", i_max);
  m.emplace_back("step2_skipped", skipped);
  m.emplace_back("step1_fallbacks", fallbacks);
}

inline std::vector<Vec> estimated_views(const ExperimentResult& res) {
  const auto& est = res.run->estimate;
  const Eigen::Index n = res.problem.pixels();
  std::vector<Vec> out;
  for (std::size_t j = 0; j < est.params.size(); ++j) {
    Vec v = WarpOperator(res.problem.grid, est.params[j], res.problem.kernel).apply(est.x.segment(0, n));
    v += est.x.segment(static_cast<Eigen::Index>(j + 1) * n, n);
    out.push_back(std::move(v));
  }
  return out;
}

/// Mean of the views after resampling each into view 1's frame with the
/// relative transform theta_{1->j}.
inline Vec registered_overlay(const ExperimentResult& res, const std::vector<TransformParams>& params) {
  const Grid& grid = res.scene.grid;
  Vec acc = Vec::Zero(grid.size());
  for (std::size_t j = 0; j < params.size(); ++j) {
    const Vec rel = relative_transform(params[0].model, params[0].theta, params[j].theta, grid.side());
    acc += WarpOperator(grid, TransformParams(params[0].model, rel), res.problem.kernel).apply(res.scene.views[j]);
  }
  return acc / static_cast<double>(params.size());
}

}  // namespace detail

/// Runs the configured experiment and fills the metrics. Throws
/// ConvergenceAssertionError when a descent check fails; the trace up to the
/// failure is still written when an output location is configured.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res = prepare_experiment(cfg);
  auto& m = res.metrics;
  const Problem& p = res.problem;
  const int l = cfg.scene.views;
  const std::string trace_path =
      !cfg.trace_path.empty() ? cfg.trace_path : (cfg.out_dir.empty() ? "" : cfg.out_dir + "/trace.csv");
  if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);

  if (cfg.mode == ExperimentMode::Synth) {
    for (int j = 0; j < l; ++j) {
      for (int i = 0; i < res.scene.params[j].theta.size(); ++i) {
        m.emplace_back("theta_" + std::to_string(j + 1) + "_" + std::to_string(i + 1), res.scene.params[j].theta[i]);
      }
    }
  } else {
    const Eigen::Index rows = p.data.rows_per_view();
    const double eps = noise_bound(cfg.sigma, static_cast<double>(l) * static_cast<double>(rows));
    m.emplace_back("epsilon", eps);
    try {
      if (cfg.auto_kappa) {
        if (!(eps > 0.0)) throw ConfigError("kappa = auto needs sigma > 0");
        std::map<double, Algorithm1Result> runs;
        auto residual = [&](double kappa) {
          Algorithm1Result r = run_algorithm1(p, solver_config_for(cfg, kappa), res.theta0);
          const double rn = stacked_residual(p, p.make_operator(r.estimate.params), r.estimate.x).norm();
          runs[kappa] = std::move(r);
          return rn;
        };
        res.kappa_search = auto_kappa(eps, residual, cfg.kappa_search);
        res.run = std::move(runs.at(res.kappa_search->kappa));
        m.emplace_back("kappa_probes", static_cast<double>(res.kappa_search->probes.size()));
        m.emplace_back("kappa_saturated", res.kappa_search->saturated ? 1.0 : 0.0);
      } else {
        res.run = run_algorithm1(p, solver_config_for(cfg, cfg.solver.kappa), res.theta0);
      }
    } catch (const ConvergenceAssertionError& e) {
      if (!trace_path.empty()) {
        std::ofstream os(trace_path);
        write_trace_csv(os, e.trace(), cfg.trace_timing);
      }
      throw;
    }
    const Algorithm1Result& run = *res.run;
    detail::add_trace_metrics(res, run);
    const double resid = stacked_residual(p, p.make_operator(run.estimate.params), run.estimate.x).norm();
    m.emplace_back("residual", resid);

    std::vector<Vec> est_theta, true_theta;
    for (int j = 0; j < l; ++j) {
      est_theta.push_back(run.estimate.params[j].theta);
      true_theta.push_back(res.scene.params[j].theta);
    }
    if (l >= 2) {
      const RegistrationError reg = registration_error(p.model, est_theta, true_theta, p.grid.side());
      m.emplace_back("sigma_registration", reg.sigma);
      m.emplace_back("registration_pairs", reg.pairs);
    }
    const std::vector<Vec> views = detail::estimated_views(res);
    double snr_sum = 0.0, mse_sum = 0.0;
    for (int j = 0; j < l; ++j) {
      const double snr = snr_db(views[j], res.scene.views[j]);
      m.emplace_back("snr_view_" + std::to_string(j + 1), snr);
      snr_sum += snr;
      mse_sum += mean_squared_error(views[j], res.scene.views[j]);
    }
    m.emplace_back("snr_mean", snr_sum / l);
    m.emplace_back("mse_mean", mse_sum / l);

    if (cfg.mode == ExperimentMode::Sr) {
      const int low_side = p.grid.side() / cfg.factor;
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < l; ++j) {
        best = std::min(best, mean_squared_error(bicubic_upsample(p.data.y[j], low_side, cfg.factor), res.scene.views[j]));
      }
      m.emplace_back("mse_bicubic_best", best);
    }
    if (cfg.baselines && cfg.mode != ExperimentMode::Sr) {
      const int levels = cfg.levels > 0 ? cfg.levels : OrthoWavelet::default_levels(p.grid.side());
      const OrthoWavelet w(WaveletFamily::Haar, p.grid.side(), levels);
      res.bpdn = solve_bpdn(w, p.data.ops, p.data.y, eps, cfg.baseline_options);
      res.group = solve_group_sparse(w, p.data.ops, p.data.y, eps, cfg.baseline_options);
      double b = 0.0, g = 0.0;
      for (int j = 0; j < l; ++j) {
        b += snr_db(res.bpdn->images[j], res.scene.views[j]);
        g += snr_db(res.group->images[j], res.scene.views[j]);
      }
      m.emplace_back("bpdn_snr_mean", b / l);
      m.emplace_back("group_snr_mean", g / l);
    }
  }

  if (!cfg.out_dir.empty()) {
    const std::string& d = cfg.out_dir;
    const int side = p.grid.side();
    const Eigen::Index n = p.pixels();
    write_pgm(d + "/reference.pgm", res.scene.reference, side, side);
    for (int j = 0; j < l; ++j) {
      write_pgm(d + "/view_" + std::to_string(j + 1) + ".pgm", res.scene.views[j], side, side);
    }
    if (res.run) {
      const Vec& x = res.run->estimate.x;
      write_pgm(d + "/background.pgm", x.segment(0, n), side, side);
      const std::vector<Vec> views = detail::estimated_views(res);
      for (int j = 0; j < l; ++j) {
        const Vec fg = (x.segment((j + 1) * n, n).array() + 0.5).matrix();
        write_pgm(d + "/foreground_" + std::to_string(j + 1) + ".pgm", fg, side, side);
        write_pgm(d + "/recon_" + std::to_string(j + 1) + ".pgm", views[j], side, side);
      }
      if (cfg.mode != ExperimentMode::Sr) {
        Vec before = Vec::Zero(n);
        for (const auto& v : res.scene.views) before += v;
        write_pgm(d + "/overlay_before.pgm", before / l, side, side);
        write_pgm(d + "/overlay_after.pgm", detail::registered_overlay(res, res.run->estimate.params), side, side);
      }
    }
    std::ofstream os(d + "/metrics.txt");
    char buf[256];
    for (const auto& [k, v] : m) {
      std::snprintf(buf, sizeof(buf), "%s=%.10g\n", k.c_str(), v);
      os << buf;
    }
  }
  if (res.run && !trace_path.empty()) {
    std::ofstream os(trace_path);
    write_trace_csv(os, res.run->trace, cfg.trace_timing);
  }
  return res;
}

}  // namespace mvr
