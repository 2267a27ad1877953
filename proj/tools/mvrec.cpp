// mvrec: joint multi-view reconstruction and registration experiments.
//
//   mvrec align --config configs/align.cfg --out out/align
//   mvrec cs --config configs/cs.cfg --seed 3 --trace out/cs_trace.csv
//   mvrec sr --config configs/sr.cfg -s side=64
//   mvrec synth --config configs/align.cfg --out out/scene

#include "mvr/harness/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

int run(const std::string& mode, const std::string& config_path, const std::string& out, long long seed,
        const std::string& trace, const std::vector<std::string>& overrides) {
  mvr::KeyValueConfig kv;
  if (!config_path.empty()) kv = mvr::KeyValueConfig::load(config_path);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw mvr::ConfigError("override '" + o + "' must be key=value");
    kv.set(o.substr(0, eq), o.substr(eq + 1));
  }
  kv.set("mode", mode);
  if (!out.empty()) kv.set("out", out);
  if (seed >= 0) kv.set("seed", std::to_string(seed));
  if (!trace.empty()) kv.set("trace", trace);

  const mvr::ExperimentConfig cfg = mvr::experiment_config_from(kv);
  for (const auto& k : kv.unused_keys()) std::cerr << "warning: unused config key '" << k << "'\n";

  const mvr::ExperimentResult res = mvr::run_experiment(cfg);
  for (const auto& [name, value] : res.metrics) std::printf("%s=%.10g\n", name.c_str(), value);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint reconstruction and registration of multi-view images"};
  app.require_subcommand(1);

  std::string config_path, out, trace;
  long long seed = -1;
  std::vector<std::string> overrides;
  std::string mode;
  for (const char* name : {"synth", "align", "cs", "sr"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config,-c", config_path, "key=value configuration file");
    sub->add_option("--out,-o", out, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--trace", trace, "CSV trace path (default <out>/trace.csv)");
    sub->add_option("--set,-s", overrides, "override a config key (key=value)");
    sub->callback([&mode, name] { mode = name; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    return run(mode, config_path, out, seed, trace, overrides);
  } catch (const mvr::ConvergenceAssertionError& e) {
    std::cerr << "assertion failed: " << e.what() << "\n";
    std::cerr << "k,L,dx,dtheta,i_max\n";
    for (const auto& r : e.trace().records) {
      std::cerr << r.k << ',' << r.objective << ',' << r.dx << ',' << r.dtheta << ',' << r.i_max << '\n';
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
