#pragma once

// A team of ranks realised as threads of one process. Ranks only talk to each
// other through point-to-point byte messages, barriers and one counting
// collective; shared vectors are written on owned entries only.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "stmg/types.hpp"

namespace stmg {

using Bytes = std::vector<std::uint8_t>;

struct TraceRecord {
  std::string phase;
  int from = 0;
  int to = 0;
  std::size_t bytes = 0;
};

/// Raised inside ranks that were blocked when another rank failed.
class TeamAborted : public Error {
 public:
  TeamAborted() : Error("team aborted by a failing rank") {}
};

/// One matrix entry on the wire.
struct Triple {
  std::uint64_t row = 0;
  std::uint64_t col = 0;
  double value = 0.0;
};

/// Length-prefixed little-endian encoding: u64 count, then (u64, u64, f64)
/// per triple.
Bytes encode_triples(std::span<const Triple> triples);
std::vector<Triple> decode_triples(const Bytes& bytes);

class Team;

class Comm {
 public:
  [[nodiscard]] int rank() const { return rank_; }
  [[nodiscard]] int size() const;

  void barrier();
  void send(int to, int tag, Bytes payload, const std::string& phase);
  Bytes recv(int from, int tag);
  /// Receives the first pending message with the given tag; returns the source.
  std::pair<int, Bytes> recv_any(int tag);
  /// counts[q] is the number of messages this rank will send to rank q; the
  /// result is the number of messages this rank will receive.
  int reduce_scatter_counts(std::span<const int> counts);

 private:
  friend class Team;
  Comm(Team& team, int rank) : team_(team), rank_(rank) {}

  Team& team_;
  int rank_;
};

class Team {
 public:
  explicit Team(int ranks);
  Team(const Team&) = delete;
  Team& operator=(const Team&) = delete;

  [[nodiscard]] int size() const { return ranks_; }

  /// Runs fn on every rank (rank 0 on the calling thread) and rethrows the
  /// first failure after all ranks have stopped.
  void run(const std::function<void(Comm&)>& fn);

  [[nodiscard]] std::vector<TraceRecord> trace() const;
  void clear_trace();
  void set_tracing(bool on) { tracing_ = on; }
  void write_trace_csv(std::ostream& out) const;

 private:
  friend class Comm;

  struct Message {
    int from;
    int tag;
    Bytes payload;
  };

  void wait(std::unique_lock<std::mutex>& lock, const std::function<bool()>& ready);
  void abort();

  int ranks_;
  bool tracing_ = false;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  bool aborted_ = false;
  int barrier_count_ = 0;
  std::uint64_t barrier_generation_ = 0;
  std::vector<std::deque<Message>> mailboxes_;
  std::vector<int> counts_;
  std::vector<TraceRecord> trace_;
};

}  // namespace stmg
