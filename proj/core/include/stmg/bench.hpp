#pragma once

// DFG flow-around-cylinder benchmark: problem setup, drag and lift, the run
// driver with CSV/JSON output, and speedup accounting.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stmg/assembly.hpp"
#include "stmg/config.hpp"
#include "stmg/dofs.hpp"
#include "stmg/mesh.hpp"

namespace stmg {

struct DragLift {
  double drag = 0.0;
  double lift = 0.0;
  double c_d = 0.0;
  double c_l = 0.0;
};

/// Forces on the obstacle faces from the velocity and pressure of a slab
/// vector at reference time s in [0,1]. The normal points from the obstacle
/// into the fluid and t = (n_y, -n_x). Coefficients use c = 2F / (U^2 L) and
/// are zero when U = 0.
DragLift drag_lift(const MeshLevel& level, const DofLayout& layout, std::span<const double> x,
                   double s, double nu, double u_mean, double length);

/// Parabolic inflow 4 u_max y (H - y) / H^2 on inflow faces, zero elsewhere.
BoundaryField channel_inflow(double u_max, double height);

HierarchicalMesh build_mesh(const BenchConfig& cfg);
ProblemData make_problem(const BenchConfig& cfg);

struct StepRecord {
  int step = 0;
  double t = 0.0;
  double c_d = 0.0;
  double c_l = 0.0;
  int newton_iters = 0;
  int gmres_iters_total = 0;
  double wall_seconds = 0.0;
};

struct RunSummary {
  double c_d_max = 0.0;
  double c_l_max = 0.0;
  double newton_avg = 0.0;
  double gmres_per_newton_avg = 0.0;
  double wall_seconds = 0.0;
  Index dofs = 0;
  std::vector<StepRecord> steps;
};

RunSummary summarize(const std::vector<StepRecord>& steps, double window_start);

void write_series_header(std::ostream& out);
void write_series_row(std::ostream& out, const StepRecord& rec, bool wall_time);
void write_summary_json(std::ostream& out, const RunSummary& summary);

/// Runs the time march for the configuration. When cfg.output.dir is not
/// empty, series.csv, summary.json and optional VTK files are written there.
RunSummary run_benchmark(const BenchConfig& cfg, std::ostream* log = nullptr);

/// S_i = t_0 / t_i for wall times measured at increasing rank counts.
std::vector<double> speedup_report(std::span<const double> wall_times);

/// Legacy VTK of the finest level with per-cell mean velocity and pressure.
void write_solution_vtk(std::ostream& out, const MeshLevel& level, const DofLayout& layout,
                        std::span<const double> x);

}  // namespace stmg
