#include "stmg/dofs.hpp"

#include <algorithm>
#include <string>

#include "stmg/elements.hpp"

namespace stmg {

int DofLayout::owner(Index global) const {
  const Index local = global % block_size();
  if (local < kDim * num_nodes) return node_owner[local % num_nodes];
  return cell_owner[(local - kDim * num_nodes) / n_p];
}

DofLayout enumerate_dofs(const HierarchicalMesh& mesh, int g, int r, int k) {
  if (r < 1) throw Error("enumerate_dofs: r must be >= 1, got " + std::to_string(r));
  if (k < 0) throw Error("enumerate_dofs: k must be >= 0, got " + std::to_string(k));
  const MeshLevel& level = mesh.level(g);
  DofLayout layout;
  layout.level = g;
  layout.r = r;
  layout.k = k;
  layout.num_cells = level.num_cells();
  layout.n_p = pressure_dofs_per_cell(kDim, r - 1);

  const Index nv = level.num_vertices();
  const Index ne = level.num_edges();
  const Index per_edge = r - 1;
  const Index per_cell = (r - 1) * (r - 1);
  layout.num_nodes = nv + ne * per_edge + layout.num_cells * per_cell;

  const int n1 = r + 1;
  layout.cell_nodes.resize(layout.num_cells * n1 * n1);
  layout.node_points.resize(layout.num_nodes);
  layout.node_owner.assign(layout.num_nodes, mesh.num_ranks());
  layout.cell_owner.resize(layout.num_cells);

  const QBasis basis(r);
  for (Index c = 0; c < layout.num_cells; ++c) {
    const Cell& cell = level.cells[c];
    layout.cell_owner[c] = cell.owner;
    for (int j = 0; j <= r; ++j) {
      for (int i = 0; i <= r; ++i) {
        Index node = -1;
        const bool bx = i == 0 || i == r;
        const bool by = j == 0 || j == r;
        if (bx && by) {
          const int corner = j == 0 ? (i == 0 ? 0 : 1) : (i == 0 ? 3 : 2);
          node = cell.vertices[corner];
        } else if (bx || by) {
          int face = 0;
          int m = 0;
          if (j == 0) {
            face = 0;
            m = i;
          } else if (i == r) {
            face = 1;
            m = j;
          } else if (j == r) {
            face = 2;
            m = i;
          } else {
            face = 3;
            m = j;
          }
          static constexpr std::array<int, 4> kFirstVertex{0, 1, 3, 0};
          const Index e = level.cell_edges[c][face];
          const Index first = cell.vertices[kFirstVertex[face]];
          const int pos = level.edges[e][0] == first ? m : r - m;
          node = nv + e * per_edge + (pos - 1);
        } else {
          node = nv + ne * per_edge + c * per_cell + (i - 1) + (j - 1) * (r - 1);
        }
        layout.cell_nodes[c * n1 * n1 + i + n1 * j] = node;
        layout.node_points[node] = map_to_physical(level, c, basis.node(i + n1 * j));
        layout.node_owner[node] = std::min(layout.node_owner[node], cell.owner);
      }
    }
  }
  return layout;
}

LocalIndexSet local_indices(const DofLayout& layout, Index cell) {
  const int nn = layout.nodes_per_cell();
  LocalIndexSet idx;
  idx.reserve(layout.local_size());
  const Index* nodes = layout.cell_nodes.data() + cell * nn;
  for (int l = 0; l <= layout.k; ++l) {
    for (int comp = 0; comp < kDim; ++comp) {
      for (int i = 0; i < nn; ++i) idx.push_back(layout.velocity_index(l, comp, nodes[i]));
    }
    for (int a = 0; a < layout.n_p; ++a) idx.push_back(layout.pressure_index(l, cell, a));
  }
  return idx;
}

std::vector<LocalIndexSet> all_local_indices(const DofLayout& layout) {
  std::vector<LocalIndexSet> out(layout.num_cells);
  for (Index c = 0; c < layout.num_cells; ++c) out[c] = local_indices(layout, c);
  return out;
}

std::vector<double> gather(std::span<const double> vec, std::span<const Index> idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vec.size()) {
      throw Error("gather: index " + std::to_string(idx[i]) + " out of range");
    }
    out[i] = vec[idx[i]];
  }
  return out;
}

void scatter_overwrite(std::span<const double> local, std::span<const Index> idx,
                       std::span<double> vec) {
  if (local.size() != idx.size()) throw Error("scatter_overwrite: size mismatch");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vec.size()) {
      throw Error("scatter_overwrite: index " + std::to_string(idx[i]) + " out of range");
    }
    vec[idx[i]] = local[i];
  }
}

Index local_block_size(int k, int d, int r) {
  Index nodes = 1;
  for (int i = 0; i < d; ++i) nodes *= r + 1;
  return static_cast<Index>(k + 1) * (d * nodes + pressure_dofs_per_cell(d, r - 1));
}

double inverse_memory_kb(Index n) { return static_cast<double>(n) * n * 8.0 / 1000.0; }

}  // namespace stmg
