#pragma once

// Cell-based Vanka smoother with cached dense inverses of the local
// space-time saddle-point blocks.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "stmg/assembly.hpp"
#include "stmg/dofs.hpp"
#include "stmg/exchange.hpp"
#include "stmg/parallel.hpp"

namespace stmg {

enum class VankaMode { kDeterministic, kRacy };

struct VankaConfig {
  double damping = 1.0;
  VankaMode mode = VankaMode::kDeterministic;
  // Drops the pressure part of r from the defect r - J d. With this set the
  // sweep only sees velocity residuals, which stalls a V-cycle whose
  // restricted residuals carry a divergence component.
  bool zero_pressure_rhs = false;
};

/// Local block J_T from owned rows and, for foreign rows, the exchange map.
Eigen::MatrixXd extract_local_jacobian(const RowBlock& rows, const ExchangeMap& exchange,
                                       const DofLayout& layout, const LocalIndexSet& idx);

class InverseCache {
 public:
  /// Inverts the blocks of all cells owned by rows.rank.
  void precompute(const RowBlock& rows, const ExchangeMap& exchange, const DofLayout& layout,
                  const std::vector<LocalIndexSet>& local);

  /// Throws when the cell is missing or the cache was built for another
  /// Jacobian version.
  [[nodiscard]] const Eigen::MatrixXd& inverse(Index cell, std::uint64_t jacobian_version) const;

  [[nodiscard]] std::uint64_t version() const { return version_; }
  [[nodiscard]] std::size_t num_cells() const { return inverses_.size(); }
  [[nodiscard]] std::size_t bytes() const;

 private:
  std::unordered_map<Index, Eigen::MatrixXd> inverses_;
  std::uint64_t version_ = 0;
};

/// Ownership data shared by all ranks of one level.
struct VankaPlan {
  // per DoF, the highest cell id containing it
  std::vector<Index> last_cell;
  // per rank, owned cells and owned rows in ascending order
  std::vector<std::vector<Index>> cells;
  std::vector<std::vector<Index>> rows;
};

VankaPlan make_vanka_plan(const DofLayout& layout, const std::vector<LocalIndexSet>& local,
                          int ranks);

/// Shared scratch vectors of one level.
struct VankaWork {
  Vector defect;
  Vector d_old;
};

/// One sweep on the calling rank; every rank of the team must call it.
/// Computes the defect r0 - J d once, then applies d_T += w J_T^{-1} defect_T
/// over owned cells in ascending order. A shared DoF keeps the update of the
/// highest cell id containing it.
void vanka_sweep(Comm& comm, const VankaPlan& plan, const std::vector<LocalIndexSet>& local,
                 const DofLayout& layout, const RowBlock& rows, const InverseCache& cache,
                 const VankaConfig& cfg, std::span<double> d, std::span<const double> r,
                 VankaWork& work);

/// Single-rank convenience wrapper around a full matrix.
class VankaSmoother {
 public:
  VankaSmoother(const DofLayout& layout, CsrMatrix jacobian, VankaConfig cfg = {});

  void sweep(std::span<double> d, std::span<const double> r);
  [[nodiscard]] const InverseCache& cache() const { return cache_; }
  [[nodiscard]] const RowBlock& rows() const { return rows_; }

 private:
  DofLayout layout_;
  std::vector<LocalIndexSet> local_;
  RowBlock rows_;
  ExchangeMap exchange_;
  InverseCache cache_;
  VankaPlan plan_;
  VankaWork work_;
  VankaConfig cfg_;
  Team team_{1};
};

}  // namespace stmg
