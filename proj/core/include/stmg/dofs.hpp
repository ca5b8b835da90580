#pragma once

// Degree-of-freedom enumeration for the Q_r / P_{r-1}^disc pair combined with
// a dG(k) temporal basis.
//
// Global layout of a space-time vector on one level, with B = 2R + S:
//   index(l, comp, node) = l*B + comp*R + node        (velocity, comp = 0,1)
//   index(l, cell, a)    = l*B + 2R + cell*n_p + a    (pressure)
// Velocity nodes are numbered vertices first, then edge-interior nodes (edge
// by edge, counted from the lower vertex id), then cell-interior nodes.
//
// The local order of one cell is, for each time block l, all component-0
// nodes (lexicographic on the reference cell), all component-1 nodes, then
// the n_p pressure functions.

#include <span>
#include <vector>

#include "stmg/mesh.hpp"
#include "stmg/types.hpp"

namespace stmg {

constexpr int kDim = 2;

struct DofLayout {
  int level = 0;
  int r = 2;
  int k = 0;
  Index num_cells = 0;
  // R: scalar velocity nodes per component
  Index num_nodes = 0;
  // n_p: pressure functions per cell
  int n_p = 0;
  // (r+1)^2 global node ids per cell, local lexicographic order
  std::vector<Index> cell_nodes;
  std::vector<Vec2> node_points;
  std::vector<int> node_owner;
  std::vector<int> cell_owner;

  [[nodiscard]] int nodes_per_cell() const { return (r + 1) * (r + 1); }
  [[nodiscard]] Index num_pressure() const { return num_cells * n_p; }
  [[nodiscard]] Index block_size() const { return kDim * num_nodes + num_pressure(); }
  [[nodiscard]] Index size() const { return (k + 1) * block_size(); }
  [[nodiscard]] int local_block() const { return kDim * nodes_per_cell() + n_p; }
  [[nodiscard]] int local_size() const { return (k + 1) * local_block(); }

  [[nodiscard]] Index velocity_index(int l, int comp, Index node) const {
    return l * block_size() + comp * num_nodes + node;
  }
  [[nodiscard]] Index pressure_index(int l, Index cell, int a) const {
    return l * block_size() + kDim * num_nodes + cell * n_p + a;
  }
  [[nodiscard]] bool is_pressure(Index global) const {
    return global % block_size() >= kDim * num_nodes;
  }
  [[nodiscard]] int owner(Index global) const;
};

using LocalIndexSet = std::vector<Index>;

/// Enumerates the DoFs of level g. Ownership follows the cell owners of the
/// mesh: a velocity node belongs to the lowest rank among its cells.
DofLayout enumerate_dofs(const HierarchicalMesh& mesh, int g, int r, int k);

LocalIndexSet local_indices(const DofLayout& layout, Index cell);

/// All local index sets of a level, one per cell.
std::vector<LocalIndexSet> all_local_indices(const DofLayout& layout);

std::vector<double> gather(std::span<const double> vec, std::span<const Index> idx);
void scatter_overwrite(std::span<const double> local, std::span<const Index> idx,
                       std::span<double> vec);

/// (k+1)(d (r+1)^d + binom(d+r-1, r-1)): size of one Vanka block.
Index local_block_size(int k, int d, int r);
/// Memory of one dense double inverse of size n in kB (1 kB = 1000 bytes).
double inverse_memory_kb(Index n);

}  // namespace stmg
