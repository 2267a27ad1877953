#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace mvr {

/// One outer iteration k, recorded after both steps: objective values refer
/// to (x^{k+1}, theta^{k+1}).
struct IterationRecord {
  int k = 0;
  double objective = 0.0;  // L
  double fidelity = 0.0;   // kappa ||A(theta) x - y||^2
  double prior = 0.0;      // f(x)
  double move = 0.0;       // h_mu(D^T (x^{k+1} - x^k))
  double gamma_x = 0.0;
  double dx = 0.0;         // ||x^{k+1} - x^k||_2
  double dtheta = 0.0;     // ||theta^{k+1} - theta^k||_2
  int i_max = 0;           // largest backtracking index over views
  double ms = 0.0;
  // Diagnostics beyond the CSV schema.
  double objective_after_step1 = 0.0;  // L(x^{k+1}, theta^k)
  int inner_iterations = 0;
  bool step1_fallback = false;
  int step2_skipped = 0;
  double coefficient_density = 0.0;  // fraction of |D^T x^{k+1}| > 1e-8
};

struct IterationTrace {
  double initial_objective = 0.0;  // L(x^0, theta^0)
  double kappa = 0.0;
  double gamma_min = 0.0;
  bool converged = false;
  std::vector<IterationRecord> records;

  double final_objective() const { return records.empty() ? initial_objective : records.back().objective; }
};

/// CSV with header k,L,fidelity,prior,move,dx,dtheta,i_max,ms. Numbers use
/// 17 significant digits so the file round-trips exactly. With
/// `include_timing` false the ms column is written as 0 for byte-stable output.
inline void write_trace_csv(std::ostream& os, const IterationTrace& trace, bool include_timing = true) {
  os << "k,L,fidelity,prior,move,dx,dtheta,i_max,ms\n";
  char buf[512];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.3f\n", r.k, r.objective,
                  r.fidelity, r.prior, r.move, r.dx, r.dtheta, r.i_max, include_timing ? r.ms : 0.0);
    os << buf;
  }
}

}  // namespace mvr
