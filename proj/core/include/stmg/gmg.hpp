#pragma once

// Geometric multigrid V-cycle over the mesh hierarchy with Vanka smoothing,
// interpolation prolongation, transpose restriction and a sparse direct
// coarse solver.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "stmg/assembly.hpp"
#include "stmg/dofs.hpp"
#include "stmg/exchange.hpp"
#include "stmg/mesh.hpp"
#include "stmg/parallel.hpp"
#include "stmg/sparse.hpp"
#include "stmg/vanka.hpp"

namespace stmg {

struct GmgConfig {
  int pre_smooth = 1;
  int post_smooth = 1;
  int coarse_level = 0;
  VankaConfig vanka;
  // per-cycle CSV diagnostics (level, residual before and after smoothing)
  bool diagnostics = false;

  void validate() const;
};

struct TransferOperator {
  CsrMatrix p;   // coarse -> fine
  CsrMatrix pt;  // fine -> coarse
};

TransferOperator build_prolongation(const HierarchicalMesh& mesh, const DofLayout& coarse,
                                    const DofLayout& fine);

void prolongate(const TransferOperator& t, std::span<const double> coarse, std::span<double> fine);
void restrict_residual(const TransferOperator& t, std::span<const double> fine,
                       std::span<double> coarse);

class CoarseSolver {
 public:
  /// Factorises the matrix; throws with a condition estimate when singular.
  void factorize(const CsrMatrix& matrix, std::uint64_t version);
  /// Throws when the factorisation belongs to another Jacobian version.
  void solve(std::span<const double> r, std::span<double> d, std::uint64_t version) const;
  [[nodiscard]] std::uint64_t version() const { return version_; }

 private:
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>> lu_;
  std::uint64_t version_ = 0;
  Index size_ = 0;
};

struct CycleEvent {
  int level = 0;
  std::string action;  // pre, residual, restrict, coarse, prolongate, post
};

struct CycleDiagnostics {
  int level = 0;
  double before = 0.0;
  double after = 0.0;
};

class Multigrid {
 public:
  /// Builds layouts, transfers and exchange maps for levels
  /// cfg.coarse_level .. mesh.num_levels()-1; the mesh partition fixes the ranks.
  Multigrid(const HierarchicalMesh& mesh, int r, int k, GmgConfig cfg);

  [[nodiscard]] int num_levels() const { return static_cast<int>(levels_.size()); }
  [[nodiscard]] int ranks() const { return team_.size(); }
  [[nodiscard]] const DofLayout& layout(int g) const { return levels_.at(g).layout; }
  [[nodiscard]] const DofLayout& fine_layout() const { return levels_.back().layout; }
  [[nodiscard]] const GmgConfig& config() const { return cfg_; }
  void set_config(const GmgConfig& cfg);
  [[nodiscard]] Team& team() { return team_; }

  /// Reassembles all level Jacobians at the given finest-level state,
  /// refreshes the ghost entries, recomputes inverses and the coarse factors.
  void update(const ProblemData& data, std::span<const double> fine_state);

  /// Sets the level operators directly (one full matrix per level, coarsest
  /// first); the rows are split by ownership.
  void set_operators(const std::vector<CsrMatrix>& matrices);

  /// One V-cycle on the finest level updating d in place.
  void v_cycle(std::span<double> d, std::span<const double> r);
  /// Preconditioner: one V-cycle with zero initial guess.
  void apply(std::span<const double> r, std::span<double> d);
  /// y = J x on the finest level.
  void multiply(std::span<const double> x, std::span<double> y);

  [[nodiscard]] const RowBlock& rows(int g, int rank) const { return levels_.at(g).rows.at(rank); }
  [[nodiscard]] const ExchangeMap& exchange(int g, int rank) const {
    return levels_.at(g).exchange.at(rank);
  }
  [[nodiscard]] const InverseCache& cache(int g, int rank) const {
    return levels_.at(g).caches.at(rank);
  }
  [[nodiscard]] const std::vector<LocalIndexSet>& local(int g) const { return levels_.at(g).local; }
  [[nodiscard]] const TransferOperator& transfer(int g) const { return levels_.at(g).transfer; }

  /// One smoothing sweep on level g (all ranks), for tests and diagnostics.
  void smooth(int g, std::span<double> d, std::span<const double> r);

  void set_tracing(bool on) { tracing_ = on; }
  [[nodiscard]] const std::vector<CycleEvent>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }
  [[nodiscard]] const std::vector<CycleDiagnostics>& diagnostics() const { return diagnostics_; }
  void write_diagnostics_csv(std::ostream& out) const;

  [[nodiscard]] std::size_t cached_cells() const;
  [[nodiscard]] std::size_t cached_bytes() const;

 private:
  struct Level {
    int mesh_level = 0;
    DofLayout layout;
    std::vector<LocalIndexSet> local;
    SparsityPattern pattern;
    std::unique_ptr<SpaceTimeAssembler> assembler;
    VankaPlan plan;
    std::vector<RowBlock> rows;
    std::vector<ExchangeMap> exchange;
    std::vector<InverseCache> caches;
    TransferOperator transfer;  // from the next coarser level
    CsrMatrix full;             // coarse level only
    std::uint64_t version = 0;
    Vector d, r, res;
    VankaWork work;
  };

  void refresh(Comm& comm);
  void cycle(Comm& comm, int g, std::span<double> d, std::span<const double> r);
  void residual_rows(Comm& comm, int g, std::span<const double> d, std::span<const double> r,
                     std::span<double> out);
  void record(int g, const char* action);

  const HierarchicalMesh& mesh_;
  GmgConfig cfg_;
  std::vector<Level> levels_;
  CoarseSolver coarse_;
  Team team_;
  bool tracing_ = false;
  std::vector<CycleEvent> trace_;
  std::vector<CycleDiagnostics> diagnostics_;
};

}  // namespace stmg
