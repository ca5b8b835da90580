#include "stmg/vanka.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace stmg {

Eigen::MatrixXd extract_local_jacobian(const RowBlock& rows, const ExchangeMap& exchange,
                                       const DofLayout& layout, const LocalIndexSet& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd jt(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Index row = idx[a];
    if (rows.owns(row)) {
      const Index local_row = rows.local_of[row];
      for (Eigen::Index b = 0; b < n; ++b) jt(a, b) = rows.matrix.coeff(local_row, idx[b]);
      continue;
    }
    const int owner = layout.owner(row);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto value = exchange.find(owner, row, idx[b]);
      if (!value) {
        throw Error("vanka: ghost entry (" + std::to_string(row) + ", " + std::to_string(idx[b]) +
                    ") from rank " + std::to_string(owner) + " is missing on rank " +
                    std::to_string(rows.rank));
      }
      jt(a, b) = *value;
    }
  }
  return jt;
}

void InverseCache::precompute(const RowBlock& rows, const ExchangeMap& exchange,
                              const DofLayout& layout, const std::vector<LocalIndexSet>& local) {
  inverses_.clear();
  inverses_.reserve(static_cast<std::size_t>(layout.num_cells));
  for (Index c = 0; c < layout.num_cells; ++c) {
    if (layout.cell_owner[c] != rows.rank) continue;
    const Eigen::MatrixXd jt = extract_local_jacobian(rows, exchange, layout, local[c]);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jt);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) {
      throw Error("vanka: local Jacobian of cell " + std::to_string(c) +
                  " is singular (reciprocal condition estimate " + std::to_string(rcond) + ")");
    }
    inverses_.emplace(c, lu.inverse());
  }
  version_ = rows.version;
}

const Eigen::MatrixXd& InverseCache::inverse(Index cell, std::uint64_t jacobian_version) const {
  if (jacobian_version != version_) {
    throw Error("vanka: inverse cache built for Jacobian version " + std::to_string(version_) +
                " used with version " + std::to_string(jacobian_version));
  }
  const auto it = inverses_.find(cell);
  if (it == inverses_.end()) throw Error("vanka: no cached inverse for cell " + std::to_string(cell));
  return it->second;
}

std::size_t InverseCache::bytes() const {
  std::size_t total = 0;
  for (const auto& [cell, inv] : inverses_) total += static_cast<std::size_t>(inv.size()) * sizeof(double);
  return total;
}

VankaPlan make_vanka_plan(const DofLayout& layout, const std::vector<LocalIndexSet>& local,
                          int ranks) {
  VankaPlan plan;
  plan.last_cell.assign(layout.size(), -1);
  plan.cells.resize(ranks);
  plan.rows.resize(ranks);
  for (Index c = 0; c < layout.num_cells; ++c) {
    for (Index j : local[c]) plan.last_cell[j] = c;
    plan.cells[layout.cell_owner[c]].push_back(c);
  }
  for (Index i = 0; i < layout.size(); ++i) plan.rows[layout.owner(i)].push_back(i);
  return plan;
}

void vanka_sweep(Comm& comm, const VankaPlan& plan, const std::vector<LocalIndexSet>& local,
                 const DofLayout& layout, const RowBlock& rows, const InverseCache& cache,
                 const VankaConfig& cfg, std::span<double> d, std::span<const double> r,
                 VankaWork& work) {
  const int rank = comm.rank();
  const auto& my_rows = plan.rows[rank];
  for (Index i : my_rows) {
    const double rhs = cfg.zero_pressure_rhs && layout.is_pressure(i) ? 0.0 : r[i];
    work.defect[i] = rhs - rows.row_dot(i, d);
  }
  if (cfg.mode == VankaMode::kRacy) {
    for (Index i : my_rows) work.d_old[i] = d[i];
  }
  comm.barrier();

  const int n = layout.local_size();
  Eigen::VectorXd def(n);
  for (Index c : plan.cells[rank]) {
    const auto& idx = local[c];
    for (int a = 0; a < n; ++a) def(a) = work.defect[idx[a]];
    const Eigen::VectorXd corr = cfg.damping * (cache.inverse(c, rows.version) * def);
    if (cfg.mode == VankaMode::kDeterministic) {
      for (int a = 0; a < n; ++a) {
        if (plan.last_cell[idx[a]] == c) d[idx[a]] += corr(a);
      }
    } else {
      for (int a = 0; a < n; ++a) {
        std::atomic_ref<double>(d[idx[a]]).store(work.d_old[idx[a]] + corr(a),
                                                 std::memory_order_relaxed);
      }
    }
  }
  comm.barrier();
}

VankaSmoother::VankaSmoother(const DofLayout& layout, CsrMatrix jacobian, VankaConfig cfg)
    : layout_(layout),
      local_(all_local_indices(layout)),
      rows_(make_full_row_block(std::move(jacobian), next_jacobian_version())),
      cfg_(cfg) {
  for (auto& o : layout_.node_owner) o = 0;
  for (auto& o : layout_.cell_owner) o = 0;
  plan_ = make_vanka_plan(layout_, local_, 1);
  cache_.precompute(rows_, exchange_, layout_, local_);
  work_.defect.assign(layout_.size(), 0.0);
  work_.d_old.assign(layout_.size(), 0.0);
}

void VankaSmoother::sweep(std::span<double> d, std::span<const double> r) {
  team_.run([&](Comm& comm) {
    vanka_sweep(comm, plan_, local_, layout_, rows_, cache_, cfg_, d, r, work_);
  });
}

}  // namespace stmg
