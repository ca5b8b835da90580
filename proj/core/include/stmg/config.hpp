#pragma once

// Run configuration. Files use `key = value` lines under `[section]` headers;
// every key is optional and unknown keys are rejected.
//
//   [geometry]   length, height, cylinder (true|false), cx, cy, diameter
//   [mesh]       n0, levels
//   [problem]    r, k, nu, u_max, gamma1, gamma2
//   [time]       t_end, tau
//   [mg]         pre_smooth, post_smooth, damping, coarse_level, diagnostics
//   [vanka]      damping, mode (deterministic|racy), zero_pressure_rhs
//   [krylov]     rel_tol, max_iter, restart
//   [newton]     abs_tol, rel_reduction, max_iter, backtrack, max_trials
//   [parallel]   ranks
//   [output]     dir, wall_time, vtk_stride, window_start, trace

#include <iosfwd>
#include <string>

#include "stmg/gmg.hpp"
#include "stmg/mesh.hpp"
#include "stmg/solvers.hpp"

namespace stmg {

struct OutputConfig {
  std::string dir = "out";
  // false writes 0 into the wall_seconds column for byte-identical reruns
  bool wall_time = true;
  int vtk_stride = 0;
  // maxima in the summary are taken over t >= window_start
  double window_start = 0.0;
  bool trace = false;
};

struct BenchConfig {
  ChannelGeometry geometry = ChannelGeometry::dfg_2d();
  int n0 = 1;
  // number of mesh levels including the coarse one
  int levels = 3;
  int r = 2;
  int k = 1;
  double nu = 1e-3;
  // inflow 4 u_max y (H - y) / H^2
  double u_max = 1.5;
  double gamma1 = 35.0;
  double gamma2 = 35.0;
  double t_end = 10.0;
  double tau = 0.005;
  int ranks = 1;
  GmgConfig gmg;
  FgmresConfig krylov;
  NewtonConfig newton;
  OutputConfig output;

  /// Mean inflow velocity, 2/3 of the peak.
  [[nodiscard]] double mean_velocity() const { return 2.0 * u_max / 3.0; }
  /// Cylinder diameter, or the channel height without a cylinder.
  [[nodiscard]] double characteristic_length() const;
  [[nodiscard]] int num_steps() const;

  void validate() const;
};

BenchConfig parse_config(std::istream& in);
BenchConfig load_config(const std::string& path);
/// Writes the effective configuration in the file format.
void write_config(std::ostream& out, const BenchConfig& cfg);

}  // namespace stmg
