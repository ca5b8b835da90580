#pragma once

// Space-time residual and Jacobian of one dG(k) time slab.
//
// For the slab (t0, t0 + tau) and test functions psi(x) chi_a(s) the residual
// collects the time derivative, the jump against the previous slab, the
// Stokes and convection volume terms, and the Nitsche terms on the Dirichlet
// boundary. Dirichlet data enter weakly, no DoF is eliminated.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stmg/dofs.hpp"
#include "stmg/mesh.hpp"
#include "stmg/parallel.hpp"
#include "stmg/sparse.hpp"

namespace stmg {

using VectorField = std::function<Vec2(Vec2 x, double t)>;
using BoundaryField = std::function<Vec2(Vec2 x, double t, BoundaryTag tag)>;

struct ProblemData {
  double nu = 1e-3;
  double gamma1 = 35.0;
  double gamma2 = 35.0;
  double tau = 0.01;
  double t_start = 0.0;
  // body force; empty means zero
  VectorField force;
  // Dirichlet datum on the faces selected by dirichlet_on; empty means zero
  BoundaryField dirichlet;
  // prescribed traction nu dv/dn - p n on outflow faces; empty gives do-nothing
  VectorField traction;
  // indexed by BoundaryTag
  std::array<bool, 4> dirichlet_on{false, true, true, false};
  bool convection = true;
  // velocity at the end of the previous slab: component 0 nodes, then component 1
  Vector v_minus;

  void validate() const;
};

/// Sorted column lists of every row; pressure-pressure couplings are left out.
using SparsityPattern = std::vector<std::vector<Index>>;

SparsityPattern build_sparsity(const DofLayout& layout);

/// Monotone counter used to stamp every assembled Jacobian.
std::uint64_t next_jacobian_version();

/// Rows of a global matrix owned by one rank, with global column indices.
struct RowBlock {
  int rank = 0;
  Index global_rows = 0;
  std::vector<Index> rows;
  // global row -> local row, -1 when not owned
  std::vector<Index> local_of;
  CsrMatrix matrix;
  std::uint64_t version = 0;

  [[nodiscard]] bool owns(Index row) const { return local_of[row] >= 0; }
  /// Throws when the row is not owned or the entry is outside the pattern.
  [[nodiscard]] double entry(Index row, Index col) const;
  [[nodiscard]] double row_dot(Index row, std::span<const double> x) const {
    return matrix.row_dot(local_of[row], x);
  }
};

/// Empty row block of the rows owned by `rank`.
RowBlock make_row_block(const DofLayout& layout, const SparsityPattern& pattern, int rank);
/// Wraps a full matrix as the single block of a one-rank run.
RowBlock make_full_row_block(CsrMatrix matrix, std::uint64_t version);

class SpaceTimeAssembler {
 public:
  SpaceTimeAssembler(const MeshLevel& level, const DofLayout& layout);

  [[nodiscard]] const DofLayout& layout() const { return layout_; }
  [[nodiscard]] const SparsityPattern& pattern() const { return pattern_; }

  /// Local residual and, if jac is non-null, the local Jacobian of one cell.
  void cell_system(Index cell, const ProblemData& data, std::span<const double> x_local,
                   std::span<double> f_local, Eigen::MatrixXd* jac) const;

  [[nodiscard]] Vector residual(const ProblemData& data, std::span<const double> x) const;
  [[nodiscard]] CsrMatrix jacobian(const ProblemData& data, std::span<const double> x) const;
  /// Owned rows of the Jacobian on one rank; contributions to rows of other
  /// ranks are shipped as messages and summed in global cell order, so the
  /// block equals the same rows of jacobian() bit for bit.
  [[nodiscard]] RowBlock jacobian_rows(Comm& comm, const ProblemData& data,
                                       std::span<const double> x) const;

  /// L2 error of the velocity against an exact field at time t0 + s tau,
  /// evaluated with the dG(k) polynomial in time of the given slab vector.
  [[nodiscard]] double velocity_l2_error(std::span<const double> x, double s,
                                         const std::function<Vec2(Vec2)>& exact) const;

 private:
  struct FaceData {
    int face = 0;
    BoundaryTag tag = BoundaryTag::kNone;
    double h = 0.0;
    Vec2 normal{};
    std::vector<double> w;
    std::vector<Vec2> x;
    std::vector<Vec2> grad;
  };
  struct CellData {
    std::vector<double> w;
    std::vector<Vec2> x;
    std::vector<Vec2> grad;
    std::vector<FaceData> faces;
  };

  const MeshLevel& level_;
  DofLayout layout_;
  SparsityPattern pattern_;
  std::vector<LocalIndexSet> local_;
  int nq_ = 0;
  int nfq_ = 0;
  std::vector<double> phi_;       // nq * nn
  std::vector<double> psi_;       // nq * n_p
  std::vector<std::vector<double>> face_phi_;  // per local face, nfq * nn
  std::vector<std::vector<double>> face_psi_;  // per local face, nfq * n_p
  std::vector<CellData> cells_;
  // temporal data
  std::vector<std::vector<double>> dt_;  // dt_[a][b] = int chi_b' chi_a
  std::vector<std::vector<double>> mt_;  // mt_[a][b] = int chi_a chi_b
  std::vector<double> chi0_;
  std::vector<double> tq_s_;
  std::vector<double> tq_w_;
  std::vector<std::vector<double>> chi_q_;  // chi_q_[q][a]
};

Vector assemble_residual(const MeshLevel& level, const DofLayout& layout, const ProblemData& data,
                         std::span<const double> x);
CsrMatrix assemble_jacobian(const MeshLevel& level, const DofLayout& layout,
                            const ProblemData& data, std::span<const double> x);

/// Coarse velocity nodes are fine velocity nodes; this copies their values
/// from a fine slab vector into a coarse one (pressure set to zero).
Vector inject_state(const HierarchicalMesh& mesh, const DofLayout& coarse, const DofLayout& fine,
                    std::span<const double> fine_state);

/// Level Jacobians for levels 0..G-1, each linearised at the state injected
/// from the finest level.
std::vector<CsrMatrix> assemble_level_jacobians(const HierarchicalMesh& mesh,
                                                const std::vector<DofLayout>& layouts,
                                                const ProblemData& data,
                                                std::span<const double> fine_state);

/// Velocity vector (2R entries) interpolating a field at the nodes.
Vector interpolate_velocity(const DofLayout& layout, const std::function<Vec2(Vec2)>& field);

}  // namespace stmg
