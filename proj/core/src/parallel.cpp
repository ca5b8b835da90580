#include "stmg/parallel.hpp"

#include <bit>
#include <exception>
#include <ostream>
#include <thread>

namespace stmg {

namespace {

void put_u64(Bytes& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(const Bytes& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[pos + b]) << (8 * b);
  return v;
}

}  // namespace

Bytes encode_triples(std::span<const Triple> triples) {
  Bytes out;
  out.reserve(8 + 24 * triples.size());
  put_u64(out, triples.size());
  for (const auto& t : triples) {
    put_u64(out, t.row);
    put_u64(out, t.col);
    put_u64(out, std::bit_cast<std::uint64_t>(t.value));
  }
  return out;
}

std::vector<Triple> decode_triples(const Bytes& bytes) {
  if (bytes.size() < 8) throw Error("decode_triples: message shorter than its length prefix");
  const std::uint64_t n = get_u64(bytes, 0);
  if (bytes.size() != 8 + 24 * n) throw Error("decode_triples: length prefix does not match payload");
  std::vector<Triple> out(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t pos = 8 + 24 * i;
    out[i] = {get_u64(bytes, pos), get_u64(bytes, pos + 8),
              std::bit_cast<double>(get_u64(bytes, pos + 16))};
  }
  return out;
}

int Comm::size() const { return team_.ranks_; }

void Comm::barrier() {
  if (team_.ranks_ == 1) return;
  std::unique_lock lock(team_.mutex_);
  const auto generation = team_.barrier_generation_;
  if (++team_.barrier_count_ == team_.ranks_) {
    team_.barrier_count_ = 0;
    ++team_.barrier_generation_;
    team_.cv_.notify_all();
    return;
  }
  team_.wait(lock, [&] { return team_.barrier_generation_ != generation; });
}

void Comm::send(int to, int tag, Bytes payload, const std::string& phase) {
  if (to < 0 || to >= team_.ranks_) throw Error("Comm::send: invalid destination rank");
  std::lock_guard lock(team_.mutex_);
  if (team_.tracing_) team_.trace_.push_back({phase, rank_, to, payload.size()});
  team_.mailboxes_[to].push_back({rank_, tag, std::move(payload)});
  team_.cv_.notify_all();
}

Bytes Comm::recv(int from, int tag) {
  std::unique_lock lock(team_.mutex_);
  auto& box = team_.mailboxes_[rank_];
  Bytes out;
  team_.wait(lock, [&] {
    for (auto it = box.begin(); it != box.end(); ++it) {
      if (it->from == from && it->tag == tag) {
        out = std::move(it->payload);
        box.erase(it);
        return true;
      }
    }
    return false;
  });
  return out;
}

std::pair<int, Bytes> Comm::recv_any(int tag) {
  std::unique_lock lock(team_.mutex_);
  auto& box = team_.mailboxes_[rank_];
  std::pair<int, Bytes> out;
  team_.wait(lock, [&] {
    for (auto it = box.begin(); it != box.end(); ++it) {
      if (it->tag == tag) {
        out = {it->from, std::move(it->payload)};
        box.erase(it);
        return true;
      }
    }
    return false;
  });
  return out;
}

int Comm::reduce_scatter_counts(std::span<const int> counts) {
  const int p = team_.ranks_;
  if (static_cast<int>(counts.size()) != p) throw Error("reduce_scatter_counts: size mismatch");
  {
    std::lock_guard lock(team_.mutex_);
    for (int q = 0; q < p; ++q) team_.counts_[rank_ * p + q] = counts[q];
  }
  barrier();
  int incoming = 0;
  {
    std::lock_guard lock(team_.mutex_);
    for (int q = 0; q < p; ++q) incoming += team_.counts_[q * p + rank_];
  }
  barrier();
  return incoming;
}

Team::Team(int ranks) : ranks_(ranks) {
  if (ranks < 1) throw Error("Team: need at least one rank");
  mailboxes_.resize(ranks);
  counts_.assign(static_cast<std::size_t>(ranks) * ranks, 0);
}

void Team::wait(std::unique_lock<std::mutex>& lock, const std::function<bool()>& ready) {
  cv_.wait(lock, [&] { return aborted_ || ready(); });
  if (aborted_) throw TeamAborted();
}

void Team::abort() {
  std::lock_guard lock(mutex_);
  aborted_ = true;
  cv_.notify_all();
}

void Team::run(const std::function<void(Comm&)>& fn) {
  {
    std::lock_guard lock(mutex_);
    aborted_ = false;
    barrier_count_ = 0;
    for (auto& box : mailboxes_) box.clear();
  }
  if (ranks_ == 1) {
    Comm comm(*this, 0);
    fn(comm);
    return;
  }
  std::vector<std::exception_ptr> errors(ranks_);
  auto body = [&](int rank) {
    Comm comm(*this, rank);
    try {
      fn(comm);
    } catch (const TeamAborted&) {
    } catch (...) {
      errors[rank] = std::current_exception();
      abort();
    }
  };
  {
    std::vector<std::jthread> threads;
    threads.reserve(ranks_ - 1);
    for (int rank = 1; rank < ranks_; ++rank) threads.emplace_back(body, rank);
    body(0);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& box : mailboxes_) {
    if (!box.empty()) throw Error("Team::run: undelivered messages left after the run");
  }
}

std::vector<TraceRecord> Team::trace() const {
  std::lock_guard lock(mutex_);
  return trace_;
}

void Team::clear_trace() {
  std::lock_guard lock(mutex_);
  trace_.clear();
}

void Team::write_trace_csv(std::ostream& out) const {
  std::lock_guard lock(mutex_);
  out << "phase,from,to,bytes\n";
  for (const auto& t : trace_) out << t.phase << ',' << t.from << ',' << t.to << ',' << t.bytes << '\n';
}

}  // namespace stmg
