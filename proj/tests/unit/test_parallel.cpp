#include <gtest/gtest.h>

#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "stmg/parallel.hpp"

namespace stmg {
namespace {

TEST(Wire, RoundTripIsBitExact) {
  const std::vector<Triple> in{{0, 1, 0.1},
                               {std::numeric_limits<std::uint64_t>::max(), 7, -0.0},
                               {3, 4, std::numeric_limits<double>::denorm_min()}};
  const auto bytes = encode_triples(in);
  EXPECT_EQ(bytes.size(), 8u + 24u * in.size());
  const auto out = decode_triples(bytes);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out[i].row, in[i].row);
    EXPECT_EQ(out[i].col, in[i].col);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(out[i].value), std::bit_cast<std::uint64_t>(in[i].value));
  }
  EXPECT_TRUE(std::signbit(out[1].value));
}

TEST(Wire, LittleEndianLayout) {
  const std::vector<Triple> in{{0x0102, 0x03, 1.0}};
  const auto b = encode_triples(in);
  EXPECT_EQ(b[0], 1);
  EXPECT_EQ(b[8], 0x02);
  EXPECT_EQ(b[9], 0x01);
  EXPECT_EQ(b[16], 0x03);
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(b[30], 0xF0);
  EXPECT_EQ(b[31], 0x3F);
}

TEST(Wire, RejectsMalformedMessages) {
  EXPECT_THROW(decode_triples(Bytes{1, 2, 3}), Error);
  auto b = encode_triples(std::vector<Triple>{{1, 2, 3.0}});
  b.pop_back();
  EXPECT_THROW(decode_triples(b), Error);
  EXPECT_TRUE(decode_triples(encode_triples({})).empty());
}

TEST(Team, PointToPointAndCounts) {
  Team team(4);
  team.set_tracing(true);
  std::vector<int> incoming(4, -1);
  std::vector<double> received(4, 0.0);
  team.run([&](Comm& comm) {
    const int p = comm.size();
    const int next = (comm.rank() + 1) % p;
    std::vector<int> counts(p, 0);
    counts[next] = 1;
    incoming[comm.rank()] = comm.reduce_scatter_counts(counts);
    comm.send(next, 5, encode_triples(std::vector<Triple>{{1, 1, 1.0 * comm.rank()}}), "ring");
    const auto [from, bytes] = comm.recv_any(5);
    EXPECT_EQ(from, (comm.rank() + p - 1) % p);
    received[comm.rank()] = decode_triples(bytes).at(0).value;
    comm.barrier();
  });
  for (int q = 0; q < 4; ++q) {
    EXPECT_EQ(incoming[q], 1);
    EXPECT_EQ(received[q], (q + 3) % 4);
  }
  const auto trace = team.trace();
  EXPECT_EQ(trace.size(), 4u);
  std::ostringstream csv;
  team.write_trace_csv(csv);
  EXPECT_EQ(csv.str().substr(0, 20), "phase,from,to,bytes\n");
  team.clear_trace();
  EXPECT_TRUE(team.trace().empty());
}

TEST(Team, FailureOnOneRankAbortsTheOthers) {
  Team team(3);
  std::atomic<int> finished{0};
  EXPECT_THROW(team.run([&](Comm& comm) {
                 if (comm.rank() == 2) throw Error("boom");
                 comm.recv(2, 1);
                 ++finished;
               }),
               Error);
  EXPECT_EQ(finished.load(), 0);
  int ran = 0;
  team.run([&](Comm& comm) {
    comm.barrier();
    if (comm.rank() == 0) ++ran;
  });
  EXPECT_EQ(ran, 1);
}

TEST(Team, UndeliveredMessagesAreReported) {
  Team team(2);
  EXPECT_THROW(team.run([](Comm& comm) {
                 if (comm.rank() == 0) comm.send(1, 9, {}, "lost");
                 comm.barrier();
               }),
               Error);
  EXPECT_THROW(Team(0), Error);
}

}  // namespace
}  // namespace stmg
