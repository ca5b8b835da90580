#include "stmg/assembly.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <string>

#include "stmg/elements.hpp"

namespace stmg {

namespace {

constexpr int kAssemblyTag = 11;

}  // namespace

void ProblemData::validate() const {
  if (!(nu > 0.0)) throw Error("ProblemData: viscosity must be positive");
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw Error("ProblemData: Nitsche penalties must be positive");
  if (!(tau > 0.0)) throw Error("ProblemData: time step must be positive");
}

std::uint64_t next_jacobian_version() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

SparsityPattern build_sparsity(const DofLayout& layout) {
  SparsityPattern pattern(layout.size());
  for (Index c = 0; c < layout.num_cells; ++c) {
    const LocalIndexSet idx = local_indices(layout, c);
    for (Index row : idx) {
      const bool row_p = layout.is_pressure(row);
      auto& list = pattern[row];
      for (Index col : idx) {
        if (row_p && layout.is_pressure(col)) continue;
        list.push_back(col);
      }
    }
  }
  for (auto& row : pattern) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return pattern;
}

double RowBlock::entry(Index row, Index col) const {
  if (row < 0 || row >= global_rows || local_of[row] < 0) {
    throw Error("RowBlock: rank " + std::to_string(rank) + " does not own row " +
                std::to_string(row));
  }
  const Index pos = matrix.find(local_of[row], col);
  if (pos < 0) {
    throw Error("RowBlock: entry (" + std::to_string(row) + ", " + std::to_string(col) +
                ") is outside the sparsity pattern");
  }
  return matrix.values()[pos];
}

RowBlock make_row_block(const DofLayout& layout, const SparsityPattern& pattern, int rank) {
  RowBlock block;
  block.rank = rank;
  block.global_rows = layout.size();
  block.local_of.assign(layout.size(), -1);
  std::vector<std::vector<Index>> rows;
  for (Index i = 0; i < layout.size(); ++i) {
    if (layout.owner(i) != rank) continue;
    block.local_of[i] = static_cast<Index>(block.rows.size());
    block.rows.push_back(i);
    rows.push_back(pattern[i]);
  }
  block.matrix = CsrMatrix(static_cast<Index>(block.rows.size()), layout.size(), rows);
  return block;
}

RowBlock make_full_row_block(CsrMatrix matrix, std::uint64_t version) {
  RowBlock block;
  block.global_rows = matrix.rows();
  block.rows.resize(matrix.rows());
  block.local_of.resize(matrix.rows());
  for (Index i = 0; i < matrix.rows(); ++i) block.rows[i] = block.local_of[i] = i;
  block.matrix = std::move(matrix);
  block.version = version;
  return block;
}

SpaceTimeAssembler::SpaceTimeAssembler(const MeshLevel& level, const DofLayout& layout)
    : level_(level), layout_(layout) {
  pattern_ = build_sparsity(layout_);
  local_ = all_local_indices(layout_);
  const int r = layout_.r;
  const int nn = layout_.nodes_per_cell();
  const int np = layout_.n_p;
  const QBasis qbasis(r);
  const PDiscBasis pbasis(r - 1);
  const QuadratureRule line = gauss_quadrature(r + 2);
  const QuadratureRule2D rule = tensorize(line);
  nq_ = static_cast<int>(rule.size());
  nfq_ = static_cast<int>(line.size());

  std::vector<Vec2> ref_grad(static_cast<std::size_t>(nq_) * nn);
  phi_.resize(static_cast<std::size_t>(nq_) * nn);
  psi_.resize(static_cast<std::size_t>(nq_) * np);
  for (int q = 0; q < nq_; ++q) {
    qbasis.eval(rule.points[q], std::span(phi_).subspan(q * nn, nn),
                std::span(ref_grad).subspan(q * nn, nn));
    pbasis.eval(rule.points[q], std::span(psi_).subspan(q * np, np));
  }
  std::vector<std::vector<Vec2>> face_ref_grad(4);
  face_phi_.resize(4);
  face_psi_.resize(4);
  for (int f = 0; f < 4; ++f) {
    face_phi_[f].resize(static_cast<std::size_t>(nfq_) * nn);
    face_psi_[f].resize(static_cast<std::size_t>(nfq_) * np);
    face_ref_grad[f].resize(static_cast<std::size_t>(nfq_) * nn);
    for (int q = 0; q < nfq_; ++q) {
      const Vec2 p = face_reference_point(f, line.points[q]);
      qbasis.eval(p, std::span(face_phi_[f]).subspan(q * nn, nn),
                  std::span(face_ref_grad[f]).subspan(q * nn, nn));
      pbasis.eval(p, std::span(face_psi_[f]).subspan(q * np, np));
    }
  }

  auto physical_grads = [&](Index c, Vec2 ref, const Vec2* in, Vec2* out, double* det_out) {
    const auto jac = map_jacobian(level, c, ref);
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if (!(det > 0.0)) {
      throw Error("SpaceTimeAssembler: cell " + std::to_string(c) + " has a non-positive Jacobian");
    }
    for (int i = 0; i < nn; ++i) {
      out[i] = {(jac[1][1] * in[i][0] - jac[1][0] * in[i][1]) / det,
                (-jac[0][1] * in[i][0] + jac[0][0] * in[i][1]) / det};
    }
    if (det_out) *det_out = det;
  };

  cells_.resize(layout_.num_cells);
  for (Index c = 0; c < layout_.num_cells; ++c) {
    CellData& cd = cells_[c];
    cd.w.resize(nq_);
    cd.x.resize(nq_);
    cd.grad.resize(static_cast<std::size_t>(nq_) * nn);
    for (int q = 0; q < nq_; ++q) {
      double det = 0.0;
      physical_grads(c, rule.points[q], &ref_grad[q * nn], &cd.grad[q * nn], &det);
      cd.w[q] = rule.weights[q] * det;
      cd.x[q] = map_to_physical(level, c, rule.points[q]);
    }
    const Cell& cell = level.cells[c];
    for (int f = 0; f < 4; ++f) {
      if (cell.faces[f] == BoundaryTag::kNone) continue;
      FaceData fd;
      fd.face = f;
      fd.tag = cell.faces[f];
      fd.h = cell_diameter(level, c);
      const auto [normal, length] = face_normal(level, c, f);
      fd.normal = normal;
      fd.w.resize(nfq_);
      fd.x.resize(nfq_);
      fd.grad.resize(static_cast<std::size_t>(nfq_) * nn);
      for (int q = 0; q < nfq_; ++q) {
        const Vec2 p = face_reference_point(f, line.points[q]);
        physical_grads(c, p, &face_ref_grad[f][q * nn], &fd.grad[q * nn], nullptr);
        fd.w[q] = line.weights[q] * length;
        fd.x[q] = map_to_physical(level, c, p);
      }
      cd.faces.push_back(std::move(fd));
    }
  }

  const int k = layout_.k;
  const TemporalBasis tb(k);
  const QuadratureRule exact = gauss_quadrature(k + 2);
  dt_.assign(k + 1, std::vector<double>(k + 1, 0.0));
  mt_.assign(k + 1, std::vector<double>(k + 1, 0.0));
  chi0_.resize(k + 1);
  for (int a = 0; a <= k; ++a) {
    chi0_[a] = tb.value(a, 0.0);
    for (int b = 0; b <= k; ++b) {
      for (std::size_t q = 0; q < exact.size(); ++q) {
        const double s = exact.points[q];
        dt_[a][b] += exact.weights[q] * tb.derivative(b, s) * tb.value(a, s);
        mt_[a][b] += exact.weights[q] * tb.value(a, s) * tb.value(b, s);
      }
    }
  }
  const QuadratureRule radau = gauss_radau_right(k + 2);
  tq_s_ = radau.points;
  tq_w_ = radau.weights;
  chi_q_.assign(radau.size(), std::vector<double>(k + 1));
  for (std::size_t q = 0; q < radau.size(); ++q) {
    for (int a = 0; a <= k; ++a) chi_q_[q][a] = tb.value(a, radau.points[q]);
  }
}

void SpaceTimeAssembler::cell_system(Index cell, const ProblemData& data,
                                     std::span<const double> x_local, std::span<double> f_local,
                                     Eigen::MatrixXd* jac) const {
  const int nn = layout_.nodes_per_cell();
  const int np = layout_.n_p;
  const int bs = 2 * nn + np;
  const int k1 = layout_.k + 1;
  const int ls = k1 * bs;
  const double nu = data.nu;
  const double tau = data.tau;
  const CellData& cd = cells_[cell];

  for (int i = 0; i < ls; ++i) {
    if (!std::isfinite(x_local[i])) {
      throw Error("assembly: non-finite state entry " + std::to_string(local_[cell][i]) +
                  " on cell " + std::to_string(cell));
    }
  }

  // spatial mass and Stokes/Nitsche matrices
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(nn, nn);
  Eigen::MatrixXd stokes = Eigen::MatrixXd::Zero(bs, bs);
  for (int q = 0; q < nq_; ++q) {
    const double w = cd.w[q];
    const double* phi = &phi_[q * nn];
    const double* psi = &psi_[q * np];
    const Vec2* grad = &cd.grad[q * nn];
    for (int i = 0; i < nn; ++i) {
      for (int j = 0; j < nn; ++j) {
        mass(i, j) += w * phi[i] * phi[j];
        const double visc = nu * w * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
        stokes(i, j) += visc;
        stokes(nn + i, nn + j) += visc;
      }
      for (int a = 0; a < np; ++a) {
        for (int c = 0; c < 2; ++c) {
          const double v = w * psi[a] * grad[i][c];
          stokes(c * nn + i, 2 * nn + a) -= v;
          stokes(2 * nn + a, c * nn + i) += v;
        }
      }
    }
  }
  for (const FaceData& fd : cd.faces) {
    if (!data.dirichlet_on[static_cast<int>(fd.tag)]) continue;
    const Vec2 n = fd.normal;
    const double pen1 = data.gamma1 * nu / fd.h;
    const double pen2 = data.gamma2 / fd.h;
    for (int q = 0; q < nfq_; ++q) {
      const double w = fd.w[q];
      const double* phi = &face_phi_[fd.face][q * nn];
      const double* psi = &face_psi_[fd.face][q * np];
      const Vec2* grad = &fd.grad[q * nn];
      for (int i = 0; i < nn; ++i) {
        const double dn_i = grad[i][0] * n[0] + grad[i][1] * n[1];
        for (int j = 0; j < nn; ++j) {
          const double dn_j = grad[j][0] * n[0] + grad[j][1] * n[1];
          const double vv = w * (-nu * dn_j * phi[i] - nu * phi[j] * dn_i + pen1 * phi[j] * phi[i]);
          for (int c = 0; c < 2; ++c) {
            stokes(c * nn + i, c * nn + j) += vv;
            for (int e = 0; e < 2; ++e) {
              stokes(c * nn + i, e * nn + j) += w * pen2 * phi[j] * n[e] * phi[i] * n[c];
            }
          }
        }
        for (int a = 0; a < np; ++a) {
          for (int c = 0; c < 2; ++c) {
            const double v = w * psi[a] * n[c] * phi[i];
            stokes(c * nn + i, 2 * nn + a) += v;
            stokes(2 * nn + a, c * nn + i) -= v;
          }
        }
      }
    }
  }

  // linear space-time operator
  Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(ls, ls);
  for (int a = 0; a < k1; ++a) {
    for (int b = 0; b < k1; ++b) {
      const double time = dt_[a][b] + chi0_[a] * chi0_[b];
      if (time != 0.0) {
        for (int c = 0; c < 2; ++c) lin.block(a * bs + c * nn, b * bs + c * nn, nn, nn) += time * mass;
      }
      lin.block(a * bs, b * bs, bs, bs) += (tau * mt_[a][b]) * stokes;
    }
  }
  const Eigen::Map<const Eigen::VectorXd> x(x_local.data(), ls);
  Eigen::Map<Eigen::VectorXd> f(f_local.data(), ls);
  f = lin * x;
  if (jac) *jac = lin;

  // jump against the previous slab
  if (!data.v_minus.empty()) {
    if (static_cast<Index>(data.v_minus.size()) != 2 * layout_.num_nodes) {
      throw Error("assembly: v_minus has wrong size");
    }
    const Index* nodes = layout_.cell_nodes.data() + cell * nn;
    for (int c = 0; c < 2; ++c) {
      Eigen::VectorXd vm(nn);
      for (int i = 0; i < nn; ++i) vm(i) = data.v_minus[c * layout_.num_nodes + nodes[i]];
      const Eigen::VectorXd mv = mass * vm;
      for (int a = 0; a < k1; ++a) f.segment(a * bs + c * nn, nn) -= chi0_[a] * mv;
    }
  }

  // time-quadrature terms: convection and data
  Eigen::VectorXd load(bs);
  Eigen::MatrixXd conv_jac(2 * nn, 2 * nn);
  Eigen::VectorXd conv(2 * nn);
  for (std::size_t tq = 0; tq < tq_s_.size(); ++tq) {
    const double t = data.t_start + tau * tq_s_[tq];
    const auto& chi = chi_q_[tq];
    const double tw = tau * tq_w_[tq];
    load.setZero();
    if (data.force) {
      for (int q = 0; q < nq_; ++q) {
        const Vec2 fv = data.force(cd.x[q], t);
        const double* phi = &phi_[q * nn];
        for (int i = 0; i < nn; ++i) {
          load(i) += cd.w[q] * fv[0] * phi[i];
          load(nn + i) += cd.w[q] * fv[1] * phi[i];
        }
      }
    }
    for (const FaceData& fd : cd.faces) {
      const bool dirichlet = data.dirichlet_on[static_cast<int>(fd.tag)];
      const Vec2 n = fd.normal;
      for (int q = 0; q < nfq_; ++q) {
        const double w = fd.w[q];
        const double* phi = &face_phi_[fd.face][q * nn];
        const double* psi = &face_psi_[fd.face][q * np];
        const Vec2* grad = &fd.grad[q * nn];
        if (dirichlet && data.dirichlet) {
          const Vec2 g = data.dirichlet(fd.x[q], t, fd.tag);
          const double gn = g[0] * n[0] + g[1] * n[1];
          for (int i = 0; i < nn; ++i) {
            const double dn_i = grad[i][0] * n[0] + grad[i][1] * n[1];
            for (int c = 0; c < 2; ++c) {
              load(c * nn + i) += w * (-nu * g[c] * dn_i + data.gamma1 * nu / fd.h * g[c] * phi[i] +
                                       data.gamma2 / fd.h * gn * n[c] * phi[i]);
            }
          }
          for (int a = 0; a < np; ++a) load(2 * nn + a) -= w * gn * psi[a];
        } else if (!dirichlet && fd.tag == BoundaryTag::kOutflow && data.traction) {
          const Vec2 tr = data.traction(fd.x[q], t);
          for (int i = 0; i < nn; ++i) {
            load(i) += w * tr[0] * phi[i];
            load(nn + i) += w * tr[1] * phi[i];
          }
        }
      }
    }
    for (int a = 0; a < k1; ++a) f.segment(a * bs, bs) -= (tw * chi[a]) * load;

    if (!data.convection) continue;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(2 * nn);
    for (int b = 0; b < k1; ++b) u += chi[b] * x.segment(b * bs, 2 * nn);
    conv.setZero();
    if (jac) conv_jac.setZero();
    for (int q = 0; q < nq_; ++q) {
      const double w = cd.w[q];
      const double* phi = &phi_[q * nn];
      const Vec2* grad = &cd.grad[q * nn];
      Vec2 v{0.0, 0.0};
      std::array<Vec2, 2> gv{};
      for (int i = 0; i < nn; ++i) {
        for (int c = 0; c < 2; ++c) {
          const double uc = u(c * nn + i);
          v[c] += uc * phi[i];
          gv[c][0] += uc * grad[i][0];
          gv[c][1] += uc * grad[i][1];
        }
      }
      for (int c = 0; c < 2; ++c) {
        const double cv = v[0] * gv[c][0] + v[1] * gv[c][1];
        for (int i = 0; i < nn; ++i) conv(c * nn + i) += w * cv * phi[i];
      }
      if (!jac) continue;
      for (int j = 0; j < nn; ++j) {
        const double adv = v[0] * grad[j][0] + v[1] * grad[j][1];
        for (int i = 0; i < nn; ++i) {
          const double wi = w * phi[i];
          for (int c = 0; c < 2; ++c) {
            for (int e = 0; e < 2; ++e) {
              double val = phi[j] * gv[c][e];
              if (c == e) val += adv;
              conv_jac(c * nn + i, e * nn + j) += wi * val;
            }
          }
        }
      }
    }
    for (int a = 0; a < k1; ++a) {
      f.segment(a * bs, 2 * nn) += (tw * chi[a]) * conv;
      if (!jac) continue;
      for (int b = 0; b < k1; ++b) {
        jac->block(a * bs, b * bs, 2 * nn, 2 * nn) += (tw * chi[a] * chi[b]) * conv_jac;
      }
    }
  }
}

Vector SpaceTimeAssembler::residual(const ProblemData& data, std::span<const double> x) const {
  data.validate();
  if (static_cast<Index>(x.size()) != layout_.size()) throw Error("residual: state has wrong size");
  Vector out(layout_.size(), 0.0);
  std::vector<double> f_local(layout_.local_size());
  for (Index c = 0; c < layout_.num_cells; ++c) {
    const auto x_local = gather(x, local_[c]);
    cell_system(c, data, x_local, f_local, nullptr);
    for (int i = 0; i < layout_.local_size(); ++i) out[local_[c][i]] += f_local[i];
  }
  return out;
}

CsrMatrix SpaceTimeAssembler::jacobian(const ProblemData& data, std::span<const double> x) const {
  data.validate();
  if (static_cast<Index>(x.size()) != layout_.size()) throw Error("jacobian: state has wrong size");
  CsrMatrix mat(layout_.size(), layout_.size(), pattern_);
  std::vector<double> f_local(layout_.local_size());
  Eigen::MatrixXd jl;
  const int ls = layout_.local_size();
  for (Index c = 0; c < layout_.num_cells; ++c) {
    const auto x_local = gather(x, local_[c]);
    cell_system(c, data, x_local, f_local, &jl);
    const auto& idx = local_[c];
    for (int i = 0; i < ls; ++i) {
      const bool row_p = layout_.is_pressure(idx[i]);
      for (int j = 0; j < ls; ++j) {
        if (row_p && layout_.is_pressure(idx[j])) continue;
        mat.add(idx[i], idx[j], jl(i, j));
      }
    }
  }
  return mat;
}

RowBlock SpaceTimeAssembler::jacobian_rows(Comm& comm, const ProblemData& data,
                                           std::span<const double> x) const {
  data.validate();
  const int rank = comm.rank();
  RowBlock block = make_row_block(layout_, pattern_, rank);
  std::vector<std::vector<Triple>> outgoing(comm.size());
  std::vector<double> f_local(layout_.local_size());
  Eigen::MatrixXd jl;
  const int ls = layout_.local_size();
  auto& values = block.matrix.values();
  for (Index c = 0; c < layout_.num_cells; ++c) {
    if (layout_.cell_owner[c] != rank) continue;
    const auto x_local = gather(x, local_[c]);
    cell_system(c, data, x_local, f_local, &jl);
    const auto& idx = local_[c];
    for (int i = 0; i < ls; ++i) {
      const Index row = idx[i];
      const bool row_p = layout_.is_pressure(row);
      const Index local_row = block.local_of[row];
      const int owner = local_row >= 0 ? rank : layout_.owner(row);
      for (int j = 0; j < ls; ++j) {
        if (row_p && layout_.is_pressure(idx[j])) continue;
        if (local_row >= 0) {
          values[block.matrix.find(local_row, idx[j])] += jl(i, j);
        } else {
          outgoing[owner].push_back({static_cast<std::uint64_t>(row),
                                     static_cast<std::uint64_t>(idx[j]), jl(i, j)});
        }
      }
    }
  }
  if (comm.size() > 1) {
    std::vector<int> counts(comm.size(), 0);
    for (int q = 0; q < comm.size(); ++q) counts[q] = outgoing[q].empty() ? 0 : 1;
    const int incoming = comm.reduce_scatter_counts(counts);
    for (int q = 0; q < comm.size(); ++q) {
      if (!outgoing[q].empty()) comm.send(q, kAssemblyTag, encode_triples(outgoing[q]), "assembly");
    }
    std::map<int, std::vector<Triple>> received;
    for (int m = 0; m < incoming; ++m) {
      auto [from, bytes] = comm.recv_any(kAssemblyTag);
      received[from] = decode_triples(bytes);
    }
    // sources in ascending rank order own ascending cell ranges
    for (const auto& [from, triples] : received) {
      for (const Triple& t : triples) {
        const Index local_row = block.local_of[static_cast<Index>(t.row)];
        if (local_row < 0) throw Error("assembly: received a row this rank does not own");
        const Index pos = block.matrix.find(local_row, static_cast<Index>(t.col));
        if (pos < 0) throw Error("assembly: received an entry outside the sparsity pattern");
        values[pos] += t.value;
      }
    }
  }
  return block;
}

double SpaceTimeAssembler::velocity_l2_error(std::span<const double> x, double s,
                                             const std::function<Vec2(Vec2)>& exact) const {
  const TemporalBasis tb(layout_.k);
  const int nn = layout_.nodes_per_cell();
  double err = 0.0;
  for (Index c = 0; c < layout_.num_cells; ++c) {
    const CellData& cd = cells_[c];
    const Index* nodes = layout_.cell_nodes.data() + c * nn;
    for (int q = 0; q < nq_; ++q) {
      Vec2 v{0.0, 0.0};
      for (int l = 0; l <= layout_.k; ++l) {
        const double chi = tb.value(l, s);
        for (int i = 0; i < nn; ++i) {
          const double phi = phi_[q * nn + i];
          v[0] += chi * phi * x[layout_.velocity_index(l, 0, nodes[i])];
          v[1] += chi * phi * x[layout_.velocity_index(l, 1, nodes[i])];
        }
      }
      const Vec2 e = exact(cd.x[q]);
      err += cd.w[q] * ((v[0] - e[0]) * (v[0] - e[0]) + (v[1] - e[1]) * (v[1] - e[1]));
    }
  }
  return std::sqrt(err);
}

Vector assemble_residual(const MeshLevel& level, const DofLayout& layout, const ProblemData& data,
                         std::span<const double> x) {
  return SpaceTimeAssembler(level, layout).residual(data, x);
}

CsrMatrix assemble_jacobian(const MeshLevel& level, const DofLayout& layout,
                            const ProblemData& data, std::span<const double> x) {
  return SpaceTimeAssembler(level, layout).jacobian(data, x);
}

Vector inject_state(const HierarchicalMesh& mesh, const DofLayout& coarse, const DofLayout& fine,
                    std::span<const double> fine_state) {
  if (fine.level != coarse.level + 1 || fine.r != coarse.r || fine.k != coarse.k) {
    throw Error("inject_state: layouts are not on consecutive levels of one discretisation");
  }
  const MeshLevel& cl = mesh.level(coarse.level);
  const int r = coarse.r;
  const int n1 = r + 1;
  std::vector<Index> fine_node(coarse.num_nodes, -1);
  for (Index c = 0; c < coarse.num_cells; ++c) {
    const Cell& cell = cl.cells[c];
    if (!cell.refined()) throw Error("inject_state: coarse cell without children");
    for (int j = 0; j <= r; ++j) {
      for (int i = 0; i <= r; ++i) {
        const int qx = 2 * i <= r ? 0 : 1;
        const int qy = 2 * j <= r ? 0 : 1;
        const Index child = cell.children[qx + 2 * qy];
        const int fi = 2 * i - qx * r;
        const int fj = 2 * j - qy * r;
        fine_node[coarse.cell_nodes[c * n1 * n1 + i + n1 * j]] =
            fine.cell_nodes[child * n1 * n1 + fi + n1 * fj];
      }
    }
  }
  Vector out(coarse.size(), 0.0);
  for (int l = 0; l <= coarse.k; ++l) {
    for (int comp = 0; comp < 2; ++comp) {
      for (Index n = 0; n < coarse.num_nodes; ++n) {
        out[coarse.velocity_index(l, comp, n)] = fine_state[fine.velocity_index(l, comp, fine_node[n])];
      }
    }
  }
  return out;
}

std::vector<CsrMatrix> assemble_level_jacobians(const HierarchicalMesh& mesh,
                                                const std::vector<DofLayout>& layouts,
                                                const ProblemData& data,
                                                std::span<const double> fine_state) {
  const int levels = static_cast<int>(layouts.size());
  std::vector<CsrMatrix> out(levels);
  Vector state(fine_state.begin(), fine_state.end());
  for (int g = levels - 1; g >= 0; --g) {
    ProblemData level_data = data;
    level_data.v_minus.clear();
    out[g] = assemble_jacobian(mesh.level(g), layouts[g], level_data, state);
    if (g > 0) state = inject_state(mesh, layouts[g - 1], layouts[g], state);
  }
  return out;
}

Vector interpolate_velocity(const DofLayout& layout, const std::function<Vec2(Vec2)>& field) {
  Vector out(2 * layout.num_nodes);
  for (Index n = 0; n < layout.num_nodes; ++n) {
    const Vec2 v = field(layout.node_points[n]);
    out[n] = v[0];
    out[layout.num_nodes + n] = v[1];
  }
  return out;
}

}  // namespace stmg
