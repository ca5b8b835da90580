#pragma once

// Ghost Jacobian entries: every rank records the (row, col) entries of its
// cell blocks whose rows are owned by another rank, and refreshes their values
// from the owners with one query and one reply message per neighbour.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stmg/assembly.hpp"
#include "stmg/dofs.hpp"
#include "stmg/parallel.hpp"

namespace stmg {

struct EntryKeyHash {
  std::size_t operator()(const std::pair<Index, Index>& key) const noexcept {
    const auto a = static_cast<std::uint64_t>(key.first);
    const auto b = static_cast<std::uint64_t>(key.second);
    return std::hash<std::uint64_t>{}(a * 0x9E3779B97F4A7C15ULL ^ (b + 0x632BE59BD9B4E019ULL));
  }
};

using EntryMap = std::unordered_map<std::pair<Index, Index>, double, EntryKeyHash>;

struct ExchangeMap {
  int rank = 0;
  // neighbour rank -> {(row, col) -> value}
  std::map<int, EntryMap> neighbors;

  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] std::optional<double> find(int owner, Index row, Index col) const;
};

/// Keys are (j, c) for every DoF j of an owned cell that another rank owns and
/// every DoF c of that cell. Values start at zero.
ExchangeMap build_exchange_map(const DofLayout& layout, const std::vector<LocalIndexSet>& local,
                               int rank);

/// Collective over all ranks: query, fill from the owner's rows, reply.
void update_exchange_values(Comm& comm, const RowBlock& own_rows, ExchangeMap& map);

/// DoFs of owned cells that are owned by other ranks, ascending.
std::vector<Index> ghost_dofs(const DofLayout& layout, const std::vector<LocalIndexSet>& local,
                              int rank);

/// Values of a shared defect vector at the ghost DoFs; callers must have
/// passed a barrier after the owners wrote their entries.
std::vector<double> extract_defect_ghosts(std::span<const double> defect,
                                          std::span<const Index> ghosts);

}  // namespace stmg
