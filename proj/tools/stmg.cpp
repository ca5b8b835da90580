#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "stmg/bench.hpp"
#include "stmg/config.hpp"
#include "stmg/exchange.hpp"
#include "stmg/gmg.hpp"
#include "stmg/vanka.hpp"

namespace fs = std::filesystem;
using namespace stmg;

namespace {

struct CommonOptions {
  std::string config;
  int ranks = 0;
  int levels = 0;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config, "configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--ranks", opt.ranks, "number of ranks (threads)")->check(CLI::PositiveNumber);
  cmd->add_option("--levels", opt.levels, "number of mesh levels")->check(CLI::PositiveNumber);
  cmd->add_option("--out", opt.out, "output directory");
}

BenchConfig effective_config(const CommonOptions& opt) {
  BenchConfig cfg = opt.config.empty() ? BenchConfig{} : load_config(opt.config);
  if (opt.ranks > 0) cfg.ranks = opt.ranks;
  if (opt.levels > 0) cfg.levels = opt.levels;
  if (!opt.out.empty()) cfg.output.dir = opt.out;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) values.push_back(std::stod(item));
  if (values.empty()) throw Error("empty list '" + text + "'");
  return values;
}

int cmd_run(const CommonOptions& opt) {
  const BenchConfig cfg = effective_config(opt);
  if (!cfg.output.dir.empty()) {
    fs::create_directories(cfg.output.dir);
    std::ofstream used(fs::path(cfg.output.dir) / "config.ini");
    write_config(used, cfg);
  }
  const RunSummary s = run_benchmark(cfg, &std::clog);
  std::cout << std::setprecision(6) << "c_D_max " << s.c_d_max << "\nc_L_max " << s.c_l_max
            << "\nnewton_avg " << s.newton_avg << "\ngmres_per_newton_avg " << s.gmres_per_newton_avg
            << "\ndofs " << s.dofs << "\nwall_seconds " << s.wall_seconds << '\n';
  return 0;
}

// Oracle checks that run in seconds; each prints one line.
int cmd_verify(const CommonOptions& opt) {
  BenchConfig cfg = effective_config(opt);
  cfg.levels = std::min(cfg.levels, 2);
  const HierarchicalMesh mesh = build_mesh(cfg);
  const int g = mesh.num_levels() - 1;
  const DofLayout layout = enumerate_dofs(mesh, g, cfg.r, cfg.k);
  const auto local = all_local_indices(layout);
  ProblemData data = make_problem(cfg);
  data.v_minus.assign(kDim * layout.num_nodes, 0.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Vector x(layout.size());
  for (auto& v : x) v = u(rng);

  int failures = 0;
  const auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    if (!ok) ++failures;
  };

  const SpaceTimeAssembler assembler(mesh.finest(), layout);
  const CsrMatrix j = assembler.jacobian(data, x);
  {
    double worst = 0.0;
    const double eps = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
      const Index col = static_cast<Index>(rng() % static_cast<std::uint64_t>(layout.size()));
      Vector xp = x, xm = x;
      xp[col] += eps;
      xm[col] -= eps;
      const Vector fp = assembler.residual(data, xp), fm = assembler.residual(data, xm);
      double diff = 0.0, norm = 0.0;
      for (Index i = 0; i < layout.size(); ++i) {
        const double a = j.coeff(i, col);
        diff += std::pow((fp[i] - fm[i]) / (2 * eps) - a, 2);
        norm += a * a;
      }
      worst = std::max(worst, std::sqrt(diff / std::max(norm, 1e-300)));
    }
    std::ostringstream d;
    d << "20 columns, max relative error " << worst;
    report("jacobian-fd", worst <= 1e-6, d.str());
  }

  if (g > 0) {
    const DofLayout coarse = enumerate_dofs(mesh, g - 1, cfg.r, cfg.k);
    const TransferOperator t = build_prolongation(mesh, coarse, layout);
    Vector c(coarse.size()), f(layout.size()), pc(layout.size()), rf(coarse.size());
    for (auto& v : c) v = u(rng);
    for (auto& v : f) v = u(rng);
    prolongate(t, c, pc);
    restrict_residual(t, f, rf);
    const double lhs = dot(pc, f), err = std::abs(lhs - dot(c, rf)) / std::max(1.0, std::abs(lhs));
    std::ostringstream d;
    d << "relative error " << err;
    report("transfer-adjoint", err <= 1e-13, d.str());
  }

  {
    Team team(cfg.ranks);
    std::vector<RowBlock> rows(cfg.ranks);
    std::vector<ExchangeMap> maps(cfg.ranks);
    team.run([&](Comm& comm) {
      rows[comm.rank()] = assembler.jacobian_rows(comm, data, x);
      maps[comm.rank()] = build_exchange_map(layout, local, comm.rank());
      update_exchange_values(comm, rows[comm.rank()], maps[comm.rank()]);
    });
    const RowBlock full = make_full_row_block(j, 0);
    const ExchangeMap none;
    Index mismatched = 0;
    for (Index c = 0; c < layout.num_cells; ++c) {
      const int owner = layout.cell_owner[c];
      const Eigen::MatrixXd a = extract_local_jacobian(rows[owner], maps[owner], layout, local[c]);
      if (a != extract_local_jacobian(full, none, layout, local[c])) ++mismatched;
    }
    std::ostringstream d;
    d << cfg.ranks << " ranks, " << mismatched << " of " << layout.num_cells << " cell blocks differ";
    report("exchange-equivalence", mismatched == 0, d.str());
  }

  {
    const HierarchicalMesh one = generate_rectangle_mesh({0.0, 0.0}, {1.0, 1.0}, 1, 1);
    const DofLayout cell = enumerate_dofs(one, 0, cfg.r, cfg.k);
    ProblemData d1 = data;
    d1.v_minus.assign(kDim * cell.num_nodes, 0.0);
    Vector s(cell.size()), r(cell.size());
    for (auto& v : s) v = u(rng);
    for (auto& v : r) v = u(rng);
    const CsrMatrix a = assemble_jacobian(one.finest(), cell, d1, s);
    VankaConfig vc;
    vc.damping = 1.0;
    VankaSmoother smoother(cell, a, vc);
    Vector dx(cell.size(), 0.0), y(cell.size());
    smoother.sweep(dx, r);
    a.multiply(dx, y);
    for (Index i = 0; i < cell.size(); ++i) y[i] = r[i] - y[i];
    const double rel = norm2(y) / norm2(r);
    std::ostringstream d;
    d << "relative residual " << rel;
    report("vanka-single-cell", rel <= 1e-10, d.str());
  }
  return failures == 0 ? 0 : 1;
}

int cmd_sweep(const CommonOptions& opt, const std::string& nus, const std::string& dampings) {
  const BenchConfig base = effective_config(opt);
  const fs::path dir = base.output.dir.empty() ? fs::path("sweep") : fs::path(base.output.dir);
  fs::create_directories(dir);
  std::ofstream csv(dir / "sweep.csv");
  csv << "nu,damping,newton_avg,gmres_per_newton_avg,status\n";
  for (double nu : parse_list(nus)) {
    for (double omega : parse_list(dampings)) {
      BenchConfig cfg = base;
      cfg.nu = nu;
      cfg.gmg.vanka.damping = omega;
      std::ostringstream name;
      name << "nu" << nu << "_w" << omega;
      cfg.output.dir = (dir / name.str()).string();
      std::string status = "ok";
      RunSummary s;
      try {
        s = run_benchmark(cfg);
      } catch (const Error& e) {
        status = "failed";
        std::clog << name.str() << ": " << e.what() << '\n';
      }
      csv << nu << ',' << omega << ',' << s.newton_avg << ',' << s.gmres_per_newton_avg << ',' << status
          << '\n';
      std::cout << "nu " << nu << " damping " << omega << ": " << status << ", GMRES/Newton "
                << s.gmres_per_newton_avg << '\n';
    }
  }
  return 0;
}

int cmd_scale(const CommonOptions& opt, const std::string& rank_list) {
  const BenchConfig base = effective_config(opt);
  const fs::path dir = base.output.dir.empty() ? fs::path("scale") : fs::path(base.output.dir);
  fs::create_directories(dir);
  std::vector<double> ranks = parse_list(rank_list), times;
  for (double p : ranks) {
    BenchConfig cfg = base;
    cfg.ranks = static_cast<int>(p);
    cfg.output.dir.clear();
    const auto start = std::chrono::steady_clock::now();
    (void)run_benchmark(cfg);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    std::cout << "ranks " << cfg.ranks << ": " << times.back() << " s\n";
  }
  const auto s = speedup_report(times);
  std::ofstream csv(dir / "scale.csv");
  csv << "ranks,wall_seconds,speedup\n";
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    csv << ranks[i] << ',' << times[i] << ',' << s[i] << '\n';
    std::cout << "S(" << ranks[i] << ") = " << s[i] << '\n';
  }
  const unsigned cores = std::thread::hardware_concurrency();
  if (cores < 2) std::clog << "note: " << cores << " hardware thread(s) available, speedups are not meaningful\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time multigrid Navier-Stokes solver"};
  app.require_subcommand(1);

  CommonOptions run_opt, verify_opt, sweep_opt, scale_opt;
  auto* run = app.add_subcommand("run", "run the benchmark described by a configuration");
  add_common(run, run_opt);
  auto* verify = app.add_subcommand("verify", "quick oracle checks on a small mesh");
  add_common(verify, verify_opt);
  std::string nus = "1e-3,5e-4", dampings = "1.0,0.7";
  auto* sweep = app.add_subcommand("sweep", "viscosity x damping grid");
  add_common(sweep, sweep_opt);
  sweep->add_option("--nu", nus, "comma separated viscosities");
  sweep->add_option("--damping", dampings, "comma separated damping factors");
  std::string rank_list = "1,2,4";
  auto* scale = app.add_subcommand("scale", "wall time and speedup over rank counts");
  add_common(scale, scale_opt);
  scale->add_option("--rank-list", rank_list, "comma separated rank counts");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opt);
    if (*verify) return cmd_verify(verify_opt);
    if (*sweep) return cmd_sweep(sweep_opt, nus, dampings);
    if (*scale) return cmd_scale(scale_opt, rank_list);
  } catch (const std::exception& e) {
    std::cerr << "stmg: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
