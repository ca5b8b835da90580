#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "stmg/bench.hpp"
#include "support.hpp"

namespace stmg {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stmg_bench_" + name);
  fs::remove_all(dir);
  return dir;
}

// Obstacle polygon of a level: the end points of its obstacle faces, sorted by angle.
std::vector<Vec2> obstacle_polygon(const MeshLevel& level, Vec2 center) {
  std::vector<Vec2> pts;
  for (Index c = 0; c < level.num_cells(); ++c) {
    for (int f = 0; f < 4; ++f) {
      if (!level.cells[c].obstacle[f]) continue;
      for (double s : {0.0, 1.0}) {
        const Vec2 p = map_to_physical(level, c, face_reference_point(f, s));
        const bool seen = std::any_of(pts.begin(), pts.end(), [&](const Vec2& q) {
          return std::hypot(p[0] - q[0], p[1] - q[1]) < 1e-12;
        });
        if (!seen) pts.push_back(p);
      }
    }
  }
  std::sort(pts.begin(), pts.end(), [&](const Vec2& a, const Vec2& b) {
    return std::atan2(a[1] - center[1], a[0] - center[0]) < std::atan2(b[1] - center[1], b[0] - center[0]);
  });
  return pts;
}

TEST(DragLift, RestStateHasNoForce) {
  const auto mesh = testing::dfg_mesh(2);
  const auto layout = enumerate_dofs(mesh, 1, 2, 1);
  const Vector x(layout.size(), 0.0);
  const DragLift dl = drag_lift(mesh.finest(), layout, x, 1.0, 1e-3, 1.0, 0.1);
  EXPECT_EQ(dl.drag, 0.0);
  EXPECT_EQ(dl.lift, 0.0);
}

TEST(DragLift, LinearPressureGivesTheEnclosedArea) {
  const auto mesh = testing::dfg_mesh(2);
  const auto layout = enumerate_dofs(mesh, 1, 3, 0);
  const MeshLevel& level = mesh.finest();
  const double area = std::abs(testing::shoelace(obstacle_polygon(level, {0.2, 0.2})));
  ASSERT_GT(area, 0.0);
  for (int axis : {0, 1}) {
    Vector x(layout.size(), 0.0);
    for (Index c = 0; c < layout.num_cells; ++c) {
      const auto coef = testing::project_pressure(level, layout, c, [&](Vec2 y) { return y[axis]; });
      for (int a = 0; a < layout.n_p; ++a) x[layout.pressure_index(0, c, a)] = coef[a];
    }
    const DragLift dl = drag_lift(level, layout, x, 1.0, 1e-3, 1.0, 0.1);
    const double force = axis == 0 ? dl.drag : dl.lift;
    const double other = axis == 0 ? dl.lift : dl.drag;
    EXPECT_NEAR(force, -area, 1e-12) << "axis " << axis;
    EXPECT_NEAR(other, 0.0, 1e-12) << "axis " << axis;
    EXPECT_NEAR(axis == 0 ? dl.c_d : dl.c_l, 2.0 * force / (1.0 * 1.0 * 0.1), 1e-12);
  }
}

TEST(DragLift, ShearOnlyEntersThroughTheTangentialDerivative) {
  // v = (y, 0): on a face with normal n the integrand is nu (t . grad v n) n_y
  const auto mesh = testing::dfg_mesh(1);
  const auto layout = enumerate_dofs(mesh, 0, 2, 0);
  const MeshLevel& level = mesh.finest();
  const Vector vel = interpolate_velocity(layout, [](Vec2 y) { return Vec2{y[1], 0.0}; });
  Vector x(layout.size(), 0.0);
  std::copy(vel.begin(), vel.end(), x.begin());
  const double nu = 0.5;
  double drag = 0.0, lift = 0.0;
  for (Index c = 0; c < level.num_cells(); ++c) {
    for (int f = 0; f < 4; ++f) {
      if (!level.cells[c].obstacle[f]) continue;
      const auto [outward, len] = face_normal(level, c, f);
      const Vec2 n{-outward[0], -outward[1]};
      const Vec2 t{n[1], -n[0]};
      const double dvt_dn = t[0] * n[1];  // grad v = [[0, 1], [0, 0]]
      drag += len * nu * dvt_dn * n[1];
      lift -= len * nu * dvt_dn * n[0];
    }
  }
  const DragLift dl = drag_lift(level, layout, x, 1.0, nu, 1.0, 0.1);
  EXPECT_NEAR(dl.drag, drag, 1e-12);
  EXPECT_NEAR(dl.lift, lift, 1e-12);
}

TEST(DragLift, NeedsAnObstacle) {
  const auto mesh = testing::square_mesh(2);
  const auto layout = enumerate_dofs(mesh, 0, 2, 1);
  EXPECT_THROW(drag_lift(mesh.finest(), layout, Vector(layout.size(), 0.0), 1.0, 1.0, 1.0, 1.0), Error);
}

TEST(Inflow, ParabolicProfile) {
  const auto g = channel_inflow(1.5, 0.41);
  EXPECT_EQ(g({0.0, 0.0}, 0.0, BoundaryTag::kInflow)[0], 0.0);
  EXPECT_NEAR(g({0.0, 0.205}, 0.0, BoundaryTag::kInflow)[0], 1.5, 1e-14);
  EXPECT_NEAR(g({0.0, 0.1}, 0.0, BoundaryTag::kInflow)[0], 4 * 1.5 * 0.1 * 0.31 / (0.41 * 0.41), 1e-14);
  EXPECT_EQ(g({0.0, 0.205}, 0.0, BoundaryTag::kInflow)[1], 0.0);
  EXPECT_EQ(g({1.0, 0.0}, 0.0, BoundaryTag::kWall)[0], 0.0);
  BenchConfig cfg;
  cfg.u_max = 0.3;
  EXPECT_NEAR(cfg.mean_velocity(), 0.2, 1e-15);
}

TEST(Summary, MaximaWindowAndAverages) {
  std::vector<StepRecord> steps{{1, 0.1, 3.0, -1.0, 2, 10, 0.5},
                                {2, 0.2, 2.0, 0.5, 3, 12, 0.5},
                                {3, 0.3, 2.5, 0.25, 1, 5, 0.5}};
  const RunSummary all = summarize(steps, 0.0);
  EXPECT_EQ(all.c_d_max, 3.0);
  EXPECT_EQ(all.c_l_max, 0.5);
  EXPECT_DOUBLE_EQ(all.newton_avg, 2.0);
  EXPECT_DOUBLE_EQ(all.gmres_per_newton_avg, 27.0 / 6.0);
  EXPECT_DOUBLE_EQ(all.wall_seconds, 1.5);
  const RunSummary late = summarize(steps, 0.2);
  EXPECT_EQ(late.c_d_max, 2.5);
  EXPECT_EQ(late.c_l_max, 0.5);
  const RunSummary empty = summarize({}, 0.0);
  EXPECT_EQ(empty.newton_avg, 0.0);
}

TEST(Output, SeriesAndSummaryFormats) {
  std::ostringstream csv;
  write_series_header(csv);
  write_series_row(csv, {7, 0.035, 3.2, -0.01, 2, 17, 1.25}, true);
  write_series_row(csv, {8, 0.04, 3.2, -0.01, 2, 17, 1.25}, false);
  EXPECT_EQ(csv.str(),
            "step,t,c_D,c_L,newton_iters,gmres_iters_total,wall_seconds\n"
            "7,0.035,3.2,-0.01,2,17,1.25\n"
            "8,0.04,3.2,-0.01,2,17,0\n");

  RunSummary s;
  s.c_d_max = 3.2;
  s.steps.resize(4);
  s.dofs = 1234;
  std::ostringstream json;
  write_summary_json(json, s);
  const auto j = nlohmann::json::parse(json.str());
  for (const char* key : {"c_D_max", "c_L_max", "newton_avg", "gmres_per_newton_avg", "steps", "dofs"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.size(), 6u);
  EXPECT_EQ(j["steps"], 4);
  EXPECT_EQ(j["dofs"], 1234);
  EXPECT_EQ(j["c_D_max"], 3.2);
}

TEST(Speedup, RatiosAgainstTheFirstMeasurement) {
  EXPECT_EQ(speedup_report(std::vector<double>{2.0, 2.0}), (std::vector<double>{1.0, 1.0}));
  const auto s = speedup_report(std::vector<double>{4.42, 2.28});
  EXPECT_NEAR(s[1], 1.9386, 1e-4);
  EXPECT_NEAR(s[1], 1.93, 0.01);
  EXPECT_THROW(speedup_report(std::vector<double>{}), Error);
  EXPECT_THROW(speedup_report(std::vector<double>{1.0, 0.0}), Error);
}

BenchConfig small_run(const std::string& dir) {
  BenchConfig cfg;
  cfg.levels = 2;
  cfg.u_max = 0.3;
  cfg.tau = 0.1;
  cfg.t_end = 0.3;
  cfg.output.dir = dir;
  cfg.output.wall_time = false;
  return cfg;
}

TEST(Run, ZeroInflowStaysAtRest) {
  const fs::path dir = scratch("zero");
  BenchConfig cfg = small_run(dir.string());
  cfg.u_max = 0.0;
  const RunSummary s = run_benchmark(cfg);
  ASSERT_EQ(s.steps.size(), 3u);
  for (const auto& rec : s.steps) {
    EXPECT_EQ(rec.c_d, 0.0);
    EXPECT_EQ(rec.c_l, 0.0);
    EXPECT_EQ(rec.gmres_iters_total, 0);
  }
  EXPECT_EQ(slurp(dir / "series.csv"),
            "step,t,c_D,c_L,newton_iters,gmres_iters_total,wall_seconds\n"
            "1,0.1,0,0,1,0,0\n2,0.2,0,0,1,0,0\n3,0.3,0,0,1,0,0\n");
  fs::remove_all(dir);
}

TEST(Run, OutputsAreReproducibleWithoutWallTime) {
  const fs::path a = scratch("a"), b = scratch("b");
  BenchConfig cfg = small_run(a.string());
  cfg.output.vtk_stride = 3;
  cfg.output.trace = true;
  cfg.ranks = 2;
  std::ostringstream log;
  const RunSummary first = run_benchmark(cfg, &log);
  cfg.output.dir = b.string();
  (void)run_benchmark(cfg);
  EXPECT_EQ(slurp(a / "series.csv"), slurp(b / "series.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_TRUE(fs::exists(a / "solution_00003.vtk"));
  EXPECT_FALSE(fs::exists(a / "solution_00001.vtk"));
  EXPECT_TRUE(fs::exists(a / "messages.csv"));
  EXPECT_NE(log.str().find("inverse cache"), std::string::npos);
  const auto j = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(j["steps"], 3);
  EXPECT_EQ(j["dofs"], first.dofs);
  EXPECT_GT(first.c_d_max, 0.0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, CoarseReynolds100Smoke) {
  BenchConfig cfg;
  cfg.levels = 2;
  cfg.tau = 0.05;
  cfg.t_end = 0.5;
  cfg.krylov.max_iter = 400;
  cfg.gmg.vanka.damping = 0.7;
  cfg.output.dir.clear();
  const RunSummary s = run_benchmark(cfg);
  ASSERT_EQ(s.steps.size(), 10u);
  for (const auto& rec : s.steps) {
    EXPECT_TRUE(std::isfinite(rec.c_d));
    EXPECT_TRUE(std::isfinite(rec.c_l));
    EXPECT_LE(rec.newton_iters, 5);
  }
  EXPECT_GT(s.c_d_max, 0.0);
}

TEST(Run, MirroredCylinderFlipsTheLift) {
  BenchConfig up = small_run("");
  up.levels = 1;
  up.t_end = 0.2;
  up.krylov.rel_tol = 1e-12;
  up.newton.abs_tol = 1e-13;
  up.newton.rel_reduction = 1e12;
  BenchConfig down = up;
  down.geometry.cylinder->center[1] = up.geometry.height - up.geometry.cylinder->center[1];
  const RunSummary a = run_benchmark(up);
  const RunSummary b = run_benchmark(down);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    EXPECT_NEAR(a.steps[i].c_d, b.steps[i].c_d, 1e-8 * std::abs(a.steps[i].c_d));
    EXPECT_NEAR(a.steps[i].c_l, -b.steps[i].c_l, 1e-8 * std::abs(a.steps[i].c_d));
    EXPECT_GT(std::abs(a.steps[i].c_l), 1e-6);
  }
}

}  // namespace
}  // namespace stmg
