#include "stmg/gmg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "stmg/elements.hpp"

namespace stmg {

void GmgConfig::validate() const {
  if (pre_smooth < 0 || post_smooth < 0) throw Error("GmgConfig: smoothing counts must be >= 0");
  if (pre_smooth == 0 && post_smooth == 0) throw Error("GmgConfig: pre and post smoothing are both zero");
  if (coarse_level < 0) throw Error("GmgConfig: coarse level must be >= 0");
}

TransferOperator build_prolongation(const HierarchicalMesh& mesh, const DofLayout& coarse,
                                    const DofLayout& fine) {
  if (fine.level != coarse.level + 1 || fine.r != coarse.r || fine.k != coarse.k) {
    throw Error("build_prolongation: layouts are not nested levels of one discretisation");
  }
  const MeshLevel& fl = mesh.level(fine.level);
  const int r = fine.r;
  const int n1 = r + 1;
  const int nn = n1 * n1;
  const int np = fine.n_p;
  const QBasis qbasis(r);
  const PDiscBasis pbasis(r - 1);

  // velocity: fine node -> (coarse node, weight)
  std::vector<std::vector<std::pair<Index, double>>> vrows(fine.num_nodes);
  std::vector<bool> done(fine.num_nodes, false);
  std::vector<double> values(nn);
  for (Index f = 0; f < fine.num_cells; ++f) {
    const Cell& cell = fl.cells[f];
    if (cell.parent < 0) throw Error("build_prolongation: fine cell without parent, levels not nested");
    const int qx = cell.quadrant % 2;
    const int qy = cell.quadrant / 2;
    for (int j = 0; j <= r; ++j) {
      for (int i = 0; i <= r; ++i) {
        const Index node = fine.cell_nodes[f * nn + i + n1 * j];
        if (done[node]) continue;
        done[node] = true;
        const Vec2 ref{(qx + double(i) / r) / 2.0, (qy + double(j) / r) / 2.0};
        qbasis.eval_values(ref, values);
        for (int m = 0; m < nn; ++m) {
          if (std::abs(values[m]) < 1e-14) continue;
          vrows[node].push_back({coarse.cell_nodes[cell.parent * nn + m], values[m]});
        }
      }
    }
  }

  // pressure: embedding of the coarse polynomials on each quadrant
  const QuadratureRule2D rule = tensorize(gauss_quadrature(r + 1));
  std::array<Eigen::MatrixXd, 4> embed;
  std::vector<double> pa(np), pb(np);
  for (int q = 0; q < 4; ++q) {
    embed[q] = Eigen::MatrixXd::Zero(np, np);
    for (std::size_t s = 0; s < rule.size(); ++s) {
      const Vec2 x = rule.points[s];
      pbasis.eval(x, pa);
      pbasis.eval({(q % 2 + x[0]) / 2.0, (q / 2 + x[1]) / 2.0}, pb);
      for (int a = 0; a < np; ++a) {
        for (int b = 0; b < np; ++b) embed[q](a, b) += rule.weights[s] * pa[a] * pb[b];
      }
    }
  }

  std::vector<std::vector<Index>> pattern(fine.size());
  std::vector<std::vector<double>> vals(fine.size());
  for (int l = 0; l <= fine.k; ++l) {
    for (int comp = 0; comp < kDim; ++comp) {
      for (Index n = 0; n < fine.num_nodes; ++n) {
        const Index row = fine.velocity_index(l, comp, n);
        for (const auto& [m, w] : vrows[n]) {
          pattern[row].push_back(coarse.velocity_index(l, comp, m));
          vals[row].push_back(w);
        }
      }
    }
    for (Index f = 0; f < fine.num_cells; ++f) {
      const Cell& cell = fl.cells[f];
      for (int a = 0; a < np; ++a) {
        const Index row = fine.pressure_index(l, f, a);
        for (int b = 0; b < np; ++b) {
          const double w = embed[cell.quadrant](a, b);
          if (std::abs(w) < 1e-14) continue;
          pattern[row].push_back(coarse.pressure_index(l, cell.parent, b));
          vals[row].push_back(w);
        }
      }
    }
  }
  TransferOperator t;
  t.p = CsrMatrix(fine.size(), coarse.size(), pattern);
  for (Index row = 0; row < fine.size(); ++row) {
    for (std::size_t e = 0; e < pattern[row].size(); ++e) t.p.add(row, pattern[row][e], vals[row][e]);
  }
  t.pt = t.p.transpose();
  return t;
}

void prolongate(const TransferOperator& t, std::span<const double> coarse, std::span<double> fine) {
  t.p.multiply(coarse, fine);
}

void restrict_residual(const TransferOperator& t, std::span<const double> fine,
                       std::span<double> coarse) {
  t.pt.multiply(fine, coarse);
}

void CoarseSolver::factorize(const CsrMatrix& matrix, std::uint64_t version) {
  const Index n = matrix.rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(matrix.nnz());
  for (Index i = 0; i < n; ++i) {
    for (Index p = matrix.row_ptr()[i]; p < matrix.row_ptr()[i + 1]; ++p) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(matrix.col_idx()[p]),
                            matrix.values()[p]);
    }
  }
  Eigen::SparseMatrix<double> a(static_cast<int>(n), static_cast<int>(matrix.cols()));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>>();
  lu_->analyzePattern(a);
  lu_->factorize(a);
  if (lu_->info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "coarse solver: matrix of size " << n << " is singular";
    if (n <= 4000) {
      const Eigen::MatrixXd dense(a);
      msg << " (reciprocal condition estimate " << dense.partialPivLu().rcond() << ")";
    }
    lu_.reset();
    throw Error(msg.str());
  }
  version_ = version;
  size_ = n;
}

void CoarseSolver::solve(std::span<const double> r, std::span<double> d, std::uint64_t version) const {
  if (!lu_) throw Error("coarse solver: no factorisation available");
  if (version != version_) {
    throw Error("coarse solver: factorisation of Jacobian version " + std::to_string(version_) +
                " used with version " + std::to_string(version));
  }
  const Eigen::Map<const Eigen::VectorXd> rhs(r.data(), size_);
  const Eigen::VectorXd x = lu_->solve(rhs);
  std::copy(x.data(), x.data() + size_, d.begin());
}

Multigrid::Multigrid(const HierarchicalMesh& mesh, int r, int k, GmgConfig cfg)
    : mesh_(mesh), cfg_(cfg), team_(mesh.num_ranks()) {
  cfg_.validate();
  if (cfg_.coarse_level >= mesh.num_levels()) {
    throw Error("Multigrid: coarse level " + std::to_string(cfg_.coarse_level) +
                " does not exist in a mesh with " + std::to_string(mesh.num_levels()) + " levels");
  }
  const int ranks = mesh.num_ranks();
  for (int m = cfg_.coarse_level; m < mesh.num_levels(); ++m) {
    Level level;
    level.mesh_level = m;
    level.layout = enumerate_dofs(mesh, m, r, k);
    level.local = all_local_indices(level.layout);
    level.assembler = std::make_unique<SpaceTimeAssembler>(mesh.level(m), level.layout);
    level.plan = make_vanka_plan(level.layout, level.local, ranks);
    const bool coarse = levels_.empty();
    if (!coarse) {
      level.transfer = build_prolongation(mesh, levels_.back().layout, level.layout);
      level.rows.resize(ranks);
      level.caches.resize(ranks);
      for (int p = 0; p < ranks; ++p) {
        level.exchange.push_back(build_exchange_map(level.layout, level.local, p));
      }
    }
    const Index n = level.layout.size();
    level.d.assign(n, 0.0);
    level.r.assign(n, 0.0);
    level.res.assign(n, 0.0);
    level.work.defect.assign(n, 0.0);
    level.work.d_old.assign(n, 0.0);
    levels_.push_back(std::move(level));
  }
}

void Multigrid::set_config(const GmgConfig& cfg) {
  cfg.validate();
  if (cfg.coarse_level != cfg_.coarse_level) {
    throw Error("Multigrid::set_config: the coarse level is fixed at construction");
  }
  cfg_ = cfg;
}

void Multigrid::refresh(Comm& comm) {
  const int rank = comm.rank();
  for (std::size_t g = 1; g < levels_.size(); ++g) {
    Level& level = levels_[g];
    update_exchange_values(comm, level.rows[rank], level.exchange[rank]);
    level.caches[rank].precompute(level.rows[rank], level.exchange[rank], level.layout, level.local);
  }
}

void Multigrid::update(const ProblemData& data, std::span<const double> fine_state) {
  const int top = num_levels() - 1;
  std::vector<Vector> states(levels_.size());
  states[top].assign(fine_state.begin(), fine_state.end());
  for (int g = top; g > 0; --g) {
    states[g - 1] = inject_state(mesh_, levels_[g - 1].layout, levels_[g].layout, states[g]);
  }
  ProblemData level_data = data;
  level_data.v_minus.clear();
  for (auto& level : levels_) level.version = next_jacobian_version();

  Level& coarse = levels_[0];
  coarse.full = coarse.assembler->jacobian(level_data, states[0]);
  coarse_.factorize(coarse.full, coarse.version);

  team_.run([&](Comm& comm) {
    const int rank = comm.rank();
    for (std::size_t g = 1; g < levels_.size(); ++g) {
      Level& level = levels_[g];
      level.rows[rank] = level.assembler->jacobian_rows(comm, level_data, states[g]);
      level.rows[rank].version = level.version;
    }
    refresh(comm);
  });
}

void Multigrid::set_operators(const std::vector<CsrMatrix>& matrices) {
  if (matrices.size() != levels_.size()) throw Error("Multigrid::set_operators: wrong number of levels");
  for (std::size_t g = 0; g < levels_.size(); ++g) {
    if (matrices[g].rows() != levels_[g].layout.size()) {
      throw Error("Multigrid::set_operators: operator size does not match level " + std::to_string(g));
    }
    levels_[g].version = next_jacobian_version();
  }
  levels_[0].full = matrices[0];
  coarse_.factorize(levels_[0].full, levels_[0].version);
  team_.run([&](Comm& comm) {
    const int rank = comm.rank();
    for (std::size_t g = 1; g < levels_.size(); ++g) {
      Level& level = levels_[g];
      const CsrMatrix& full = matrices[g];
      RowBlock block;
      block.rank = rank;
      block.global_rows = full.rows();
      block.local_of.assign(full.rows(), -1);
      std::vector<std::vector<Index>> pattern;
      for (Index i : level.plan.rows[rank]) {
        block.local_of[i] = static_cast<Index>(block.rows.size());
        block.rows.push_back(i);
        pattern.emplace_back(full.col_idx().begin() + full.row_ptr()[i],
                             full.col_idx().begin() + full.row_ptr()[i + 1]);
      }
      block.matrix = CsrMatrix(static_cast<Index>(block.rows.size()), full.cols(), pattern);
      for (std::size_t lr = 0; lr < block.rows.size(); ++lr) {
        const Index i = block.rows[lr];
        for (Index p = full.row_ptr()[i]; p < full.row_ptr()[i + 1]; ++p) {
          block.matrix.add(static_cast<Index>(lr), full.col_idx()[p], full.values()[p]);
        }
      }
      block.version = level.version;
      level.rows[rank] = std::move(block);
    }
    refresh(comm);
  });
}

void Multigrid::record(int g, const char* action) {
  if (tracing_) trace_.push_back({levels_[g].mesh_level, action});
}

void Multigrid::residual_rows(Comm& comm, int g, std::span<const double> d,
                              std::span<const double> r, std::span<double> out) {
  const Level& level = levels_[g];
  const RowBlock& rows = level.rows[comm.rank()];
  for (Index i : level.plan.rows[comm.rank()]) out[i] = r[i] - rows.row_dot(i, d);
  comm.barrier();
}

void Multigrid::cycle(Comm& comm, int g, std::span<double> d, std::span<const double> r) {
  const bool root = comm.rank() == 0;
  if (g == 0) {
    comm.barrier();
    if (root) {
      record(0, "coarse");
      coarse_.solve(r, d, levels_[0].version);
    }
    comm.barrier();
    return;
  }
  Level& level = levels_[g];
  Level& below = levels_[g - 1];
  const int rank = comm.rank();
  const RowBlock& rows = level.rows[rank];
  const InverseCache& cache = level.caches[rank];

  double before = 0.0;
  if (cfg_.diagnostics) {
    residual_rows(comm, g, d, r, level.res);
    if (root) before = norm2(level.res);
    comm.barrier();
  }
  for (int s = 0; s < cfg_.pre_smooth; ++s) {
    if (root) record(g, "pre");
    vanka_sweep(comm, level.plan, level.local, level.layout, rows, cache, cfg_.vanka, d, r, level.work);
  }
  if (root) record(g, "residual");
  residual_rows(comm, g, d, r, level.res);
  if (root) record(g, "restrict");
  for (Index i : below.plan.rows[rank]) {
    below.r[i] = level.transfer.pt.row_dot(i, level.res);
    below.d[i] = 0.0;
  }
  comm.barrier();
  cycle(comm, g - 1, below.d, below.r);
  if (root) record(g, "prolongate");
  for (Index i : level.plan.rows[rank]) d[i] += level.transfer.p.row_dot(i, below.d);
  comm.barrier();
  for (int s = 0; s < cfg_.post_smooth; ++s) {
    if (root) record(g, "post");
    vanka_sweep(comm, level.plan, level.local, level.layout, rows, cache, cfg_.vanka, d, r, level.work);
  }
  if (cfg_.diagnostics) {
    residual_rows(comm, g, d, r, level.res);
    if (root) diagnostics_.push_back({level.mesh_level, before, norm2(level.res)});
    comm.barrier();
  }
}

void Multigrid::v_cycle(std::span<double> d, std::span<const double> r) {
  const int top = num_levels() - 1;
  if (static_cast<Index>(d.size()) != levels_[top].layout.size() || d.size() != r.size()) {
    throw Error("Multigrid::v_cycle: vector sizes do not match the finest level");
  }
  team_.run([&](Comm& comm) { cycle(comm, top, d, r); });
}

void Multigrid::apply(std::span<const double> r, std::span<double> d) {
  std::fill(d.begin(), d.end(), 0.0);
  v_cycle(d, r);
}

void Multigrid::multiply(std::span<const double> x, std::span<double> y) {
  const int top = num_levels() - 1;
  if (top == 0) {
    levels_[0].full.multiply(x, y);
    return;
  }
  team_.run([&](Comm& comm) {
    const Level& level = levels_[top];
    const RowBlock& rows = level.rows[comm.rank()];
    for (Index i : level.plan.rows[comm.rank()]) y[i] = rows.row_dot(i, x);
  });
}

void Multigrid::smooth(int g, std::span<double> d, std::span<const double> r) {
  if (g < 1 || g >= num_levels()) throw Error("Multigrid::smooth: level has no smoother");
  Level& level = levels_[g];
  team_.run([&](Comm& comm) {
    vanka_sweep(comm, level.plan, level.local, level.layout, level.rows[comm.rank()],
                level.caches[comm.rank()], cfg_.vanka, d, r, level.work);
  });
}

void Multigrid::write_diagnostics_csv(std::ostream& out) const {
  out << "level,residual_before,residual_after\n";
  const auto old = out.precision(10);
  for (const auto& d : diagnostics_) out << d.level << ',' << d.before << ',' << d.after << '\n';
  out.precision(old);
}

std::size_t Multigrid::cached_cells() const {
  std::size_t n = 0;
  for (const auto& level : levels_) {
    for (const auto& c : level.caches) n += c.num_cells();
  }
  return n;
}

std::size_t Multigrid::cached_bytes() const {
  std::size_t n = 0;
  for (const auto& level : levels_) {
    for (const auto& c : level.caches) n += c.bytes();
  }
  return n;
}

}  // namespace stmg
