#include <benchmark/benchmark.h>

#include <random>

#include "stmg/assembly.hpp"
#include "stmg/exchange.hpp"
#include "stmg/gmg.hpp"
#include "stmg/vanka.hpp"

namespace {

using namespace stmg;

HierarchicalMesh channel(int levels, int ranks) {
  HierarchicalMesh mesh = generate_channel_mesh(ChannelGeometry::dfg_2d(), 1);
  for (int g = 1; g < levels; ++g) mesh.refine_uniform();
  mesh.partition(ranks);
  return mesh;
}

Vector noise(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ProblemData flow(const DofLayout& layout) {
  ProblemData data;
  data.nu = 1e-3;
  data.tau = 0.05;
  data.v_minus.assign(kDim * layout.num_nodes, 0.0);
  return data;
}

void BM_Jacobian(benchmark::State& state) {
  const auto mesh = channel(static_cast<int>(state.range(0)), 1);
  const auto layout = enumerate_dofs(mesh, mesh.num_levels() - 1, 2, 1);
  const SpaceTimeAssembler assembler(mesh.finest(), layout);
  const ProblemData data = flow(layout);
  const Vector x = noise(layout.size(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(assembler.jacobian(data, x));
  state.counters["dofs"] = static_cast<double>(layout.size());
}
BENCHMARK(BM_Jacobian)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Residual(benchmark::State& state) {
  const auto mesh = channel(static_cast<int>(state.range(0)), 1);
  const auto layout = enumerate_dofs(mesh, mesh.num_levels() - 1, 2, 1);
  const SpaceTimeAssembler assembler(mesh.finest(), layout);
  const ProblemData data = flow(layout);
  const Vector x = noise(layout.size(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(assembler.residual(data, x));
}
BENCHMARK(BM_Residual)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_VankaSweep(benchmark::State& state) {
  const auto mesh = channel(static_cast<int>(state.range(0)), 1);
  const auto layout = enumerate_dofs(mesh, mesh.num_levels() - 1, 2, 1);
  const CsrMatrix j = assemble_jacobian(mesh.finest(), layout, flow(layout), noise(layout.size(), 3));
  VankaSmoother smoother(layout, j);
  const Vector r = noise(layout.size(), 4);
  Vector d(layout.size(), 0.0);
  for (auto _ : state) {
    smoother.sweep(d, r);
    benchmark::ClobberMemory();
  }
  state.counters["cells"] = static_cast<double>(layout.num_cells);
}
BENCHMARK(BM_VankaSweep)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_VCycle(benchmark::State& state) {
  const auto mesh = channel(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  Multigrid mg(mesh, 2, 1, GmgConfig{});
  const Vector zero(mg.fine_layout().size(), 0.0);
  mg.update(flow(mg.fine_layout()), zero);
  const Vector r = noise(zero.size(), 5);
  Vector d(zero.size());
  for (auto _ : state) {
    mg.apply(r, d);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_VCycle)->Args({3, 1})->Args({3, 2})->Args({3, 4})->Unit(benchmark::kMillisecond);

void BM_ExchangeUpdate(benchmark::State& state) {
  const int ranks = static_cast<int>(state.range(0));
  const auto mesh = channel(3, ranks);
  const auto layout = enumerate_dofs(mesh, 2, 2, 1);
  const auto local = all_local_indices(layout);
  const SpaceTimeAssembler assembler(mesh.finest(), layout);
  const ProblemData data = flow(layout);
  const Vector x = noise(layout.size(), 6);
  Team team(ranks);
  std::vector<RowBlock> rows(ranks);
  std::vector<ExchangeMap> maps(ranks);
  team.run([&](Comm& comm) {
    rows[comm.rank()] = assembler.jacobian_rows(comm, data, x);
    maps[comm.rank()] = build_exchange_map(layout, local, comm.rank());
  });
  for (auto _ : state) {
    team.run([&](Comm& comm) { update_exchange_values(comm, rows[comm.rank()], maps[comm.rank()]); });
  }
  std::size_t entries = 0;
  for (const auto& m : maps) entries += m.size();
  state.counters["ghost_entries"] = static_cast<double>(entries);
}
BENCHMARK(BM_ExchangeUpdate)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
