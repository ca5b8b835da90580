#include "stmg/exchange.hpp"

#include <algorithm>
#include <string>

namespace stmg {

namespace {

constexpr int kQueryTag = 21;
constexpr int kReplyTag = 22;

std::vector<Triple> sorted_triples(const EntryMap& entries) {
  std::vector<Triple> out;
  out.reserve(entries.size());
  for (const auto& [key, value] : entries) {
    out.push_back({static_cast<std::uint64_t>(key.first), static_cast<std::uint64_t>(key.second), value});
  }
  std::sort(out.begin(), out.end(), [](const Triple& a, const Triple& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  return out;
}

}  // namespace

std::size_t ExchangeMap::size() const {
  std::size_t n = 0;
  for (const auto& [rank, entries] : neighbors) n += entries.size();
  return n;
}

std::optional<double> ExchangeMap::find(int owner, Index row, Index col) const {
  const auto it = neighbors.find(owner);
  if (it == neighbors.end()) return std::nullopt;
  const auto e = it->second.find({row, col});
  if (e == it->second.end()) return std::nullopt;
  return e->second;
}

ExchangeMap build_exchange_map(const DofLayout& layout, const std::vector<LocalIndexSet>& local,
                               int rank) {
  ExchangeMap map;
  map.rank = rank;
  for (Index c = 0; c < layout.num_cells; ++c) {
    if (layout.cell_owner[c] != rank) continue;
    const auto& idx = local[c];
    for (Index j : idx) {
      const int owner = layout.owner(j);
      if (owner == rank) continue;
      auto& entries = map.neighbors[owner];
      for (Index col : idx) entries.try_emplace({j, col}, 0.0);
    }
  }
  return map;
}

void update_exchange_values(Comm& comm, const RowBlock& own_rows, ExchangeMap& map) {
  const int p = comm.size();
  if (p == 1) return;
  std::vector<int> counts(p, 0);
  for (const auto& [owner, entries] : map.neighbors) {
    if (!entries.empty()) counts[owner] = 1;
  }
  const int incoming = comm.reduce_scatter_counts(counts);

  // 1: queries to the owners
  for (const auto& [owner, entries] : map.neighbors) {
    if (entries.empty()) continue;
    comm.send(owner, kQueryTag, encode_triples(sorted_triples(entries)), "query");
  }
  // 2: fill incoming queries from owned rows and reply
  for (int m = 0; m < incoming; ++m) {
    auto [from, bytes] = comm.recv_any(kQueryTag);
    std::vector<Triple> query = decode_triples(bytes);
    for (Triple& t : query) {
      const auto row = static_cast<Index>(t.row);
      const auto col = static_cast<Index>(t.col);
      if (row < 0 || row >= own_rows.global_rows || !own_rows.owns(row) ||
          own_rows.matrix.find(own_rows.local_of[row], col) < 0) {
        throw Error("exchange: protocol error, rank " + std::to_string(from) + " queried (" +
                    std::to_string(row) + ", " + std::to_string(col) + ") from rank " +
                    std::to_string(comm.rank()) + " which holds no such entry");
      }
      t.value = own_rows.entry(row, col);
    }
    comm.send(from, kReplyTag, encode_triples(query), "reply");
  }
  // 3: store replies
  for (auto& [owner, entries] : map.neighbors) {
    if (entries.empty()) continue;
    const std::vector<Triple> reply = decode_triples(comm.recv(owner, kReplyTag));
    if (reply.size() != entries.size()) {
      throw Error("exchange: reply from rank " + std::to_string(owner) + " has wrong length");
    }
    for (const Triple& t : reply) {
      auto it = entries.find({static_cast<Index>(t.row), static_cast<Index>(t.col)});
      if (it == entries.end()) {
        throw Error("exchange: reply from rank " + std::to_string(owner) + " contains an unknown key");
      }
      it->second = t.value;
    }
  }
  comm.barrier();
}

std::vector<Index> ghost_dofs(const DofLayout& layout, const std::vector<LocalIndexSet>& local,
                              int rank) {
  std::vector<Index> out;
  for (Index c = 0; c < layout.num_cells; ++c) {
    if (layout.cell_owner[c] != rank) continue;
    for (Index j : local[c]) {
      if (layout.owner(j) != rank) out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> extract_defect_ghosts(std::span<const double> defect,
                                          std::span<const Index> ghosts) {
  std::vector<double> out(ghosts.size());
  for (std::size_t i = 0; i < ghosts.size(); ++i) out[i] = defect[ghosts[i]];
  return out;
}

}  // namespace stmg
