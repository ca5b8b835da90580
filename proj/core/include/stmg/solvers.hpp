#pragma once

// Flexible GMRES, damped Newton with backtracking line search and the
// slab-by-slab time marching driver.

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "stmg/assembly.hpp"
#include "stmg/gmg.hpp"
#include "stmg/mesh.hpp"

namespace stmg {

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct FgmresConfig {
  double rel_tol = 1e-4;
  int max_iter = 200;
  // 0 keeps the full Krylov basis
  int restart = 0;

  void validate() const;
};

struct FgmresResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  // residual norm estimate after each iteration, starting with the initial one
  std::vector<double> residuals;
};

class FgmresNotConverged : public Error {
 public:
  FgmresNotConverged(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  [[nodiscard]] const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Right-preconditioned flexible GMRES with modified Gram-Schmidt and Givens
/// rotations. Starts from x0 when given, else from zero.
FgmresResult fgmres(const LinearOperator& a, std::span<const double> rhs,
                    const LinearOperator& preconditioner, const FgmresConfig& cfg,
                    std::span<const double> x0 = {});

struct NewtonConfig {
  double abs_tol = 1e-10;
  double rel_reduction = 1e4;
  int max_iter = 25;
  double backtrack = 0.5;
  int max_trials = 12;

  void validate() const;
};

struct NewtonStats {
  int iterations = 0;
  int gmres_total = 0;
  std::vector<int> gmres_iterations;
  std::vector<double> residuals;
  std::vector<double> step_lengths;

  [[nodiscard]] double gmres_per_newton() const {
    return iterations == 0 ? 0.0 : static_cast<double>(gmres_total) / iterations;
  }
};

/// Newton solver for one time slab on the finest mesh level.
class SlabSolver {
 public:
  SlabSolver(const HierarchicalMesh& mesh, int r, int k, GmgConfig gmg, FgmresConfig krylov,
             NewtonConfig newton);

  [[nodiscard]] const DofLayout& layout() const { return multigrid_.fine_layout(); }
  [[nodiscard]] Multigrid& multigrid() { return multigrid_; }
  [[nodiscard]] const SpaceTimeAssembler& assembler() const { return assembler_; }
  [[nodiscard]] const HierarchicalMesh& mesh() const { return mesh_; }

  /// Solves F(X) = 0 in place; at least one Newton step is taken.
  NewtonStats newton_solve(const ProblemData& data, Vector& x);

  FgmresConfig krylov;
  NewtonConfig newton;

 private:
  const HierarchicalMesh& mesh_;
  Multigrid multigrid_;
  SpaceTimeAssembler assembler_;
};

struct StepReport {
  int step = 0;
  double t = 0.0;
  NewtonStats stats;
  double wall_seconds = 0.0;
};

/// Velocity part (2R entries) of the last time block of a slab vector, which
/// is the trace at the slab end.
Vector end_velocity(const DofLayout& layout, std::span<const double> x);

/// Initial guess: the given velocity in every time block, pressure copied
/// from the previous slab when available.
Vector warm_start(const DofLayout& layout, std::span<const double> v_minus,
                  std::span<const double> previous);

/// Solves the slabs n = 1..steps of length data.tau starting at data.t_start
/// with v_minus = v0. The callback sees every converged slab.
Vector time_march(SlabSolver& solver, ProblemData data, const Vector& v0, int steps,
                  const std::function<void(const StepReport&, const Vector&)>& on_step = {});

struct CheckpointMeta {
  int level = 0;
  int r = 2;
  int k = 1;
  int steps = 0;
  double t = 0.0;
};

/// Writes path.bin (little-endian f64) and path.json.
void write_checkpoint(const std::string& path, std::span<const double> values,
                      const CheckpointMeta& meta);
Vector read_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace stmg
