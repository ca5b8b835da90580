#include "stmg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "stmg/elements.hpp"
#include "stmg/solvers.hpp"

namespace stmg {

DragLift drag_lift(const MeshLevel& level, const DofLayout& layout, std::span<const double> x,
                   double s, double nu, double u_mean, double length) {
  const int r = layout.r;
  const int nn = layout.nodes_per_cell();
  const int np = layout.n_p;
  const QBasis qbasis(r);
  const PDiscBasis pbasis(r - 1);
  const TemporalBasis tb(layout.k);
  const QuadratureRule line = gauss_quadrature(r + 2);
  std::vector<double> chi(layout.k + 1);
  for (int l = 0; l <= layout.k; ++l) chi[l] = tb.value(l, s);

  std::vector<double> phi(nn), psi(np);
  std::vector<Vec2> ref_grad(nn);
  DragLift out;
  bool any = false;
  for (Index c = 0; c < level.num_cells(); ++c) {
    const Cell& cell = level.cells[c];
    for (int f = 0; f < 4; ++f) {
      if (!cell.obstacle[f]) continue;
      any = true;
      const auto [cell_normal, face_length] = face_normal(level, c, f);
      const Vec2 n{-cell_normal[0], -cell_normal[1]};
      const Vec2 t{n[1], -n[0]};
      const Index* nodes = layout.cell_nodes.data() + c * nn;
      for (std::size_t q = 0; q < line.size(); ++q) {
        const Vec2 ref = face_reference_point(f, line.points[q]);
        qbasis.eval(ref, phi, ref_grad);
        pbasis.eval(ref, psi);
        const auto jac = map_jacobian(level, c, ref);
        const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        std::array<Vec2, 2> grad_v{};
        double p = 0.0;
        for (int l = 0; l <= layout.k; ++l) {
          for (int i = 0; i < nn; ++i) {
            const Vec2 g{(jac[1][1] * ref_grad[i][0] - jac[1][0] * ref_grad[i][1]) / det,
                         (-jac[0][1] * ref_grad[i][0] + jac[0][0] * ref_grad[i][1]) / det};
            for (int comp = 0; comp < 2; ++comp) {
              const double u = chi[l] * x[layout.velocity_index(l, comp, nodes[i])];
              grad_v[comp][0] += u * g[0];
              grad_v[comp][1] += u * g[1];
            }
          }
          for (int a = 0; a < np; ++a) p += chi[l] * psi[a] * x[layout.pressure_index(l, c, a)];
        }
        double dvt_dn = 0.0;
        for (int comp = 0; comp < 2; ++comp) {
          dvt_dn += t[comp] * (grad_v[comp][0] * n[0] + grad_v[comp][1] * n[1]);
        }
        const double w = line.weights[q] * face_length;
        out.drag += w * (nu * dvt_dn * n[1] - p * n[0]);
        out.lift -= w * (nu * dvt_dn * n[0] + p * n[1]);
      }
    }
  }
  if (!any) throw Error("drag_lift: the mesh has no obstacle faces");
  const double scale = u_mean == 0.0 ? 0.0 : 2.0 / (u_mean * u_mean * length);
  out.c_d = scale * out.drag;
  out.c_l = scale * out.lift;
  return out;
}

BoundaryField channel_inflow(double u_max, double height) {
  return [u_max, height](Vec2 x, double, BoundaryTag tag) -> Vec2 {
    if (tag != BoundaryTag::kInflow) return {0.0, 0.0};
    return {4.0 * u_max * x[1] * (height - x[1]) / (height * height), 0.0};
  };
}

HierarchicalMesh build_mesh(const BenchConfig& cfg) {
  HierarchicalMesh mesh = generate_channel_mesh(cfg.geometry, cfg.n0);
  for (int g = 1; g < cfg.levels; ++g) mesh.refine_uniform();
  mesh.partition(cfg.ranks);
  return mesh;
}

ProblemData make_problem(const BenchConfig& cfg) {
  ProblemData data;
  data.nu = cfg.nu;
  data.gamma1 = cfg.gamma1;
  data.gamma2 = cfg.gamma2;
  data.tau = cfg.tau;
  data.dirichlet = channel_inflow(cfg.u_max, cfg.geometry.height);
  data.validate();
  return data;
}

RunSummary summarize(const std::vector<StepRecord>& steps, double window_start) {
  RunSummary s;
  s.steps = steps;
  bool first = true;
  long newton = 0;
  long gmres = 0;
  for (const auto& rec : steps) {
    newton += rec.newton_iters;
    gmres += rec.gmres_iters_total;
    s.wall_seconds += rec.wall_seconds;
    if (rec.t + 1e-12 < window_start) continue;
    if (first) {
      s.c_d_max = rec.c_d;
      s.c_l_max = rec.c_l;
      first = false;
    } else {
      s.c_d_max = std::max(s.c_d_max, rec.c_d);
      s.c_l_max = std::max(s.c_l_max, rec.c_l);
    }
  }
  if (!steps.empty()) s.newton_avg = static_cast<double>(newton) / static_cast<double>(steps.size());
  if (newton > 0) s.gmres_per_newton_avg = static_cast<double>(gmres) / static_cast<double>(newton);
  return s;
}

void write_series_header(std::ostream& out) {
  out << "step,t,c_D,c_L,newton_iters,gmres_iters_total,wall_seconds\n";
}

void write_series_row(std::ostream& out, const StepRecord& rec, bool wall_time) {
  std::ostringstream row;
  row << std::setprecision(12) << rec.step << ',' << rec.t << ',' << rec.c_d << ',' << rec.c_l << ','
      << rec.newton_iters << ',' << rec.gmres_iters_total << ','
      << (wall_time ? rec.wall_seconds : 0.0) << '\n';
  out << row.str();
}

void write_summary_json(std::ostream& out, const RunSummary& summary) {
  const nlohmann::json j{{"c_D_max", summary.c_d_max},
                         {"c_L_max", summary.c_l_max},
                         {"newton_avg", summary.newton_avg},
                         {"gmres_per_newton_avg", summary.gmres_per_newton_avg},
                         {"steps", summary.steps.size()},
                         {"dofs", summary.dofs}};
  out << j.dump(2) << '\n';
}

RunSummary run_benchmark(const BenchConfig& cfg, std::ostream* log) {
  cfg.validate();
  const HierarchicalMesh mesh = build_mesh(cfg);
  SlabSolver solver(mesh, cfg.r, cfg.k, cfg.gmg, cfg.krylov, cfg.newton);
  solver.multigrid().team().set_tracing(cfg.output.trace);
  const ProblemData data = make_problem(cfg);
  const DofLayout& layout = solver.layout();

  std::ofstream csv;
  const bool files = !cfg.output.dir.empty();
  const std::filesystem::path dir(cfg.output.dir);
  if (files) {
    std::filesystem::create_directories(dir);
    csv.open(dir / "series.csv");
    if (!csv) throw Error("run_benchmark: cannot write " + (dir / "series.csv").string());
    write_series_header(csv);
  }
  if (log) {
    *log << "levels " << mesh.num_levels() << ", cells " << mesh.finest().num_cells()
         << ", slab dofs " << layout.size() << ", ranks " << cfg.ranks << '\n';
  }

  std::vector<StepRecord> records;
  const Vector v0(kDim * layout.num_nodes, 0.0);
  const bool obstacle = cfg.geometry.cylinder.has_value();
  time_march(solver, data, v0, cfg.num_steps(), [&](const StepReport& rep, const Vector& x) {
    StepRecord rec;
    rec.step = rep.step;
    rec.t = rep.t;
    rec.newton_iters = rep.stats.iterations;
    rec.gmres_iters_total = rep.stats.gmres_total;
    rec.wall_seconds = rep.wall_seconds;
    if (obstacle) {
      const DragLift dl = drag_lift(mesh.finest(), layout, x, 1.0, cfg.nu, cfg.mean_velocity(),
                                    cfg.characteristic_length());
      rec.c_d = dl.c_d;
      rec.c_l = dl.c_l;
    }
    records.push_back(rec);
    if (files) {
      write_series_row(csv, rec, cfg.output.wall_time);
      csv.flush();
      if (cfg.output.vtk_stride > 0 && rep.step % cfg.output.vtk_stride == 0) {
        std::ostringstream name;
        name << "solution_" << std::setw(5) << std::setfill('0') << rep.step << ".vtk";
        std::ofstream vtk(dir / name.str());
        write_solution_vtk(vtk, mesh.finest(), layout, x);
      }
    }
    if (log) {
      *log << "step " << rec.step << " t=" << rec.t << " c_D=" << rec.c_d << " c_L=" << rec.c_l
           << " newton=" << rec.newton_iters << " gmres=" << rec.gmres_iters_total << '\n';
    }
  });

  RunSummary summary = summarize(records, cfg.output.window_start);
  summary.dofs = layout.size();
  if (files) {
    std::ofstream json(dir / "summary.json");
    write_summary_json(json, summary);
    if (cfg.output.trace) {
      std::ofstream trace(dir / "messages.csv");
      solver.multigrid().team().write_trace_csv(trace);
    }
    if (cfg.gmg.diagnostics) {
      std::ofstream diag(dir / "cycles.csv");
      solver.multigrid().write_diagnostics_csv(diag);
    }
  }
  if (log) {
    *log << "inverse cache: " << solver.multigrid().cached_cells() << " cells, "
         << solver.multigrid().cached_bytes() << " bytes\n";
  }
  return summary;
}

std::vector<double> speedup_report(std::span<const double> wall_times) {
  if (wall_times.empty()) throw Error("speedup_report: no measurements");
  std::vector<double> out;
  out.reserve(wall_times.size());
  for (double t : wall_times) {
    if (!(t > 0.0)) throw Error("speedup_report: wall times must be positive");
    out.push_back(wall_times.front() / t);
  }
  return out;
}

void write_solution_vtk(std::ostream& out, const MeshLevel& level, const DofLayout& layout,
                        std::span<const double> x) {
  const int nn = layout.nodes_per_cell();
  const Index off = layout.k * layout.block_size();
  std::vector<double> vx(level.num_cells()), vy(level.num_cells()), p(level.num_cells());
  for (Index c = 0; c < level.num_cells(); ++c) {
    const Index* nodes = layout.cell_nodes.data() + c * nn;
    for (int i = 0; i < nn; ++i) {
      vx[c] += x[off + nodes[i]] / nn;
      vy[c] += x[off + layout.num_nodes + nodes[i]] / nn;
    }
    // the constant basis function has value 1, so this is the cell mean
    p[c] = x[layout.pressure_index(layout.k, c, 0)];
  }
  write_vtk(out, level, {{"velocity_x", vx}, {"velocity_y", vy}, {"pressure", p}});
}

}  // namespace stmg
