#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "stmg/elements.hpp"
#include "stmg/gmg.hpp"
#include "support.hpp"

namespace stmg {
namespace {

// Value of component `comp` of a discrete velocity at reference point ref of a
// cell, evaluated with the nodal basis of that cell.
double velocity_at_ref(const DofLayout& layout, const Vector& x, int l, int comp, Index cell, Vec2 ref) {
  const int nn = (layout.r + 1) * (layout.r + 1);
  const QBasis basis(layout.r);
  std::vector<double> phi(nn);
  basis.eval_values(ref, phi);
  double v = 0.0;
  for (int m = 0; m < nn; ++m) {
    v += phi[m] * x[layout.velocity_index(l, comp, layout.cell_nodes[cell * nn + m])];
  }
  return v;
}

double pressure_at_ref(const DofLayout& layout, const Vector& x, int l, Index cell, Vec2 ref) {
  const PDiscBasis basis(layout.r - 1);
  std::vector<double> psi(layout.n_p);
  basis.eval(ref, psi);
  double p = 0.0;
  for (int a = 0; a < layout.n_p; ++a) p += psi[a] * x[layout.pressure_index(l, cell, a)];
  return p;
}

struct Pair {
  HierarchicalMesh mesh;
  DofLayout coarse, fine;
  TransferOperator t;

  explicit Pair(HierarchicalMesh m, int k = 1)
      : mesh(std::move(m)),
        coarse(enumerate_dofs(mesh, mesh.num_levels() - 2, 2, k)),
        fine(enumerate_dofs(mesh, mesh.num_levels() - 1, 2, k)),
        t(build_prolongation(mesh, coarse, fine)) {}

  [[nodiscard]] Vector prolong(const Vector& c) const {
    Vector f(fine.size());
    prolongate(t, c, f);
    return f;
  }
};

TEST(Prolongation, ShapeAndConstants) {
  const Pair s(testing::dfg_mesh(2));
  EXPECT_EQ(s.t.p.rows(), s.fine.size());
  EXPECT_EQ(s.t.p.cols(), s.coarse.size());
  EXPECT_EQ(s.t.pt.rows(), s.coarse.size());

  Vector ones(s.coarse.size(), 0.0);
  for (Index i = 0; i < s.coarse.size(); ++i) {
    if (!s.coarse.is_pressure(i)) ones[i] = 1.0;
  }
  for (int l = 0; l <= s.coarse.k; ++l) {
    for (Index c = 0; c < s.coarse.num_cells; ++c) ones[s.coarse.pressure_index(l, c, 0)] = 1.0;
  }
  const Vector f = s.prolong(ones);
  for (Index i = 0; i < s.fine.size(); ++i) {
    if (!s.fine.is_pressure(i)) EXPECT_NEAR(f[i], 1.0, 1e-13) << i;
  }
  for (int l = 0; l <= s.fine.k; ++l) {
    for (Index c = 0; c < s.fine.num_cells; ++c) {
      for (int a = 0; a < s.fine.n_p; ++a) {
        EXPECT_NEAR(f[s.fine.pressure_index(l, c, a)], a == 0 ? 1.0 : 0.0, 1e-13);
      }
    }
  }
}

TEST(Prolongation, VelocityRowsSumToOne) {
  const Pair s(testing::square_mesh(2, 2));
  for (Index i = 0; i < s.fine.size(); ++i) {
    if (s.fine.is_pressure(i)) continue;
    double sum = 0.0;
    for (Index p = s.t.p.row_ptr()[i]; p < s.t.p.row_ptr()[i + 1]; ++p) sum += s.t.p.values()[p];
    EXPECT_NEAR(sum, 1.0, 1e-13);
  }
}

TEST(Prolongation, ReproducesCoarseFunctionsPointwise) {
  const Pair s(testing::dfg_mesh(2));
  const Vector c = testing::random_vector(s.coarse.size(), 17);
  const Vector f = s.prolong(c);
  const MeshLevel& fl = s.mesh.level(s.fine.level);
  std::mt19937 rng(3);
  std::uniform_int_distribution<Index> pick(0, s.fine.num_cells - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index cell = pick(rng);
    const Cell& fc = fl.cells[cell];
    const Vec2 ref{u(rng), u(rng)};
    const Vec2 parent_ref{(fc.quadrant % 2 + ref[0]) / 2.0, (fc.quadrant / 2 + ref[1]) / 2.0};
    for (int l = 0; l <= s.fine.k; ++l) {
      for (int comp = 0; comp < 2; ++comp) {
        EXPECT_NEAR(velocity_at_ref(s.fine, f, l, comp, cell, ref),
                    velocity_at_ref(s.coarse, c, l, comp, fc.parent, parent_ref), 1e-12);
      }
      EXPECT_NEAR(pressure_at_ref(s.fine, f, l, cell, ref),
                  pressure_at_ref(s.coarse, c, l, fc.parent, parent_ref), 1e-12);
    }
  }
}

TEST(Prolongation, RestrictionIsTheAdjoint) {
  const Pair s(testing::dfg_mesh(2));
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Vector c = testing::random_vector(s.coarse.size(), 100 + seed);
    const Vector f = testing::random_vector(s.fine.size(), 200 + seed);
    const Vector pc = s.prolong(c);
    Vector rf(s.coarse.size());
    restrict_residual(s.t, f, rf);
    const double lhs = dot(pc, f), rhs = dot(c, rf);
    EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::abs(lhs)));
  }
  Vector zero(s.coarse.size(), 1.0);
  restrict_residual(s.t, Vector(s.fine.size(), 0.0), zero);
  for (double v : zero) EXPECT_EQ(v, 0.0);
}

TEST(Prolongation, GramMatrixMatchesDense) {
  const Pair s(testing::square_mesh(1, 2), 0);
  const Eigen::MatrixXd p = testing::dense(s.t.p);
  EXPECT_EQ((testing::dense(s.t.pt) - p.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::MatrixXd gram = p.transpose() * p;
  EXPECT_TRUE(gram.isApprox(gram.transpose()));
  EXPECT_GT(gram.diagonal().minCoeff(), 0.0);
}

TEST(Prolongation, RejectsNonNestedLayouts) {
  const auto mesh = testing::square_mesh(2, 3);
  const auto l0 = enumerate_dofs(mesh, 0, 2, 1);
  const auto l2 = enumerate_dofs(mesh, 2, 2, 1);
  const auto l1k0 = enumerate_dofs(mesh, 1, 2, 0);
  EXPECT_THROW(build_prolongation(mesh, l0, l2), Error);
  EXPECT_THROW(build_prolongation(mesh, l0, l1k0), Error);
}

CsrMatrix identity(Index n) {
  std::vector<std::vector<Index>> pattern(n);
  for (Index i = 0; i < n; ++i) pattern[i] = {i};
  CsrMatrix a(n, n, pattern);
  for (Index i = 0; i < n; ++i) a.add(i, i, 1.0);
  return a;
}

TEST(CoarseSolver, IdentityAndSaddlePoint) {
  CoarseSolver solver;
  const CsrMatrix id = identity(5);
  solver.factorize(id, 7);
  const Vector r = testing::random_vector(5, 1);
  Vector d(5);
  solver.solve(r, d, 7);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(d[i], r[i], 1e-15);

  const auto mesh = testing::square_mesh(2);
  const auto layout = enumerate_dofs(mesh, 0, 2, 1);
  const CsrMatrix j = assemble_jacobian(mesh.finest(), layout, testing::navier_stokes_data(layout),
                                        testing::random_vector(layout.size(), 5));
  solver.factorize(j, 8);
  const Vector rhs = testing::random_vector(layout.size(), 2);
  Vector x(layout.size());
  solver.solve(rhs, x, 8);
  const Vector ref = testing::dense_solve(j, rhs);
  for (Index i = 0; i < layout.size(); ++i) EXPECT_NEAR(x[i], ref[i], 1e-10 * (1 + std::abs(ref[i])));
}

TEST(CoarseSolver, GuardsAgainstStaleOrMissingFactors) {
  CoarseSolver solver;
  Vector d(3);
  EXPECT_THROW(solver.solve(Vector(3, 1.0), d, 0), Error);
  solver.factorize(identity(3), 4);
  EXPECT_THROW(solver.solve(Vector(3, 1.0), d, 5), Error);
  CsrMatrix zero = identity(3);
  zero.set_zero();
  try {
    solver.factorize(zero, 6);
    FAIL() << "expected a singular matrix error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("singular"), std::string::npos);
  }
  EXPECT_THROW(solver.solve(Vector(3, 1.0), d, 6), Error);
}

TEST(GmgConfig, Validation) {
  GmgConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.pre_smooth = -1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.pre_smooth = 0;
  cfg.post_smooth = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.post_smooth = 2;
  EXPECT_NO_THROW(cfg.validate());
  cfg.coarse_level = -1;
  EXPECT_THROW(cfg.validate(), Error);

  const auto mesh = testing::square_mesh(1, 2);
  GmgConfig far;
  far.coarse_level = 2;
  EXPECT_THROW(Multigrid(mesh, 2, 0, far), Error);
  Multigrid mg(mesh, 2, 0, GmgConfig{});
  GmgConfig moved;
  moved.coarse_level = 1;
  EXPECT_THROW(mg.set_config(moved), Error);
  EXPECT_THROW(mg.set_operators({}), Error);
}

// Stokes hierarchy on the channel with the fine Jacobian kept as an oracle.
struct Hierarchy {
  HierarchicalMesh mesh;
  Multigrid mg;
  CsrMatrix fine;

  Hierarchy(int levels, int ranks, GmgConfig cfg, int k = 1)
      : mesh(testing::dfg_mesh(levels, ranks)), mg(mesh, 2, k, cfg) {
    const ProblemData data = testing::stokes_data(mg.fine_layout(), 1e-3, 0.05);
    const Vector zero(mg.fine_layout().size(), 0.0);
    mg.update(data, zero);
    fine = assemble_jacobian(mesh.finest(), mg.fine_layout(), data, zero);
  }

  [[nodiscard]] double residual(const Vector& d, const Vector& r) const {
    Vector y(r.size());
    fine.multiply(d, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = r[i] - y[i];
    return norm2(y);
  }

  // Residual contraction of `cycles` V-cycles from zero.
  double contraction(const Vector& r, int cycles) {
    Vector d(r.size(), 0.0);
    const double start = residual(d, r);
    for (int c = 0; c < cycles; ++c) mg.v_cycle(d, r);
    return std::pow(residual(d, r) / start, 1.0 / cycles);
  }
};

TEST(Multigrid, SingleLevelIsADirectSolve) {
  Hierarchy h(1, 1, GmgConfig{});
  EXPECT_EQ(h.mg.num_levels(), 1);
  const Vector r = testing::random_vector(h.fine.rows(), 11);
  Vector d(r.size(), 0.0);
  h.mg.apply(r, d);
  EXPECT_LE(testing::relative_residual(h.fine, d, r), 1e-12);
  EXPECT_THROW(h.mg.smooth(0, d, r), Error);
}

TEST(Multigrid, TwoLevelCycleContracts) {
  Hierarchy v11(2, 1, GmgConfig{});
  GmgConfig heavy;
  heavy.pre_smooth = heavy.post_smooth = 4;
  Hierarchy v44(2, 1, heavy);
  const Vector r = testing::random_vector(v11.fine.rows(), 12);
  const double rho1 = v11.contraction(r, 10);
  const double rho4 = v44.contraction(r, 10);
  EXPECT_LT(rho1, 1.0);
  EXPECT_LE(rho4, rho1);
}

TEST(Multigrid, FineOperatorMatchesAssembly) {
  Hierarchy h(2, 2, GmgConfig{});
  const Vector x = testing::random_vector(h.fine.rows(), 13);
  Vector a(x.size()), b(x.size());
  h.mg.multiply(x, a);
  h.fine.multiply(x, b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(h.mg.cached_cells(), static_cast<std::size_t>(h.mg.fine_layout().num_cells));
  EXPECT_EQ(h.mg.cached_bytes(), h.mg.cached_cells() * 42 * 42 * sizeof(double));
}

TEST(Multigrid, TraceFollowsTheVShape) {
  Hierarchy h(3, 1, GmgConfig{});
  const Vector r = testing::random_vector(h.fine.rows(), 14);
  Vector d(r.size(), 0.0);
  h.mg.v_cycle(d, r);
  EXPECT_TRUE(h.mg.trace().empty());
  h.mg.set_tracing(true);
  h.mg.v_cycle(d, r);
  std::vector<std::pair<int, std::string>> got;
  for (const auto& e : h.mg.trace()) got.emplace_back(e.level, e.action);
  const std::vector<std::pair<int, std::string>> expect{
      {2, "pre"},     {2, "residual"},   {2, "restrict"}, {1, "pre"},
      {1, "residual"}, {1, "restrict"},  {0, "coarse"},   {1, "prolongate"},
      {1, "post"},    {2, "prolongate"}, {2, "post"}};
  EXPECT_EQ(got, expect);
  h.mg.clear_trace();
  EXPECT_TRUE(h.mg.trace().empty());
}

TEST(Multigrid, PreconditionerIsLinear) {
  Hierarchy h(2, 1, GmgConfig{});
  const Index n = h.fine.rows();
  Vector z(n, 5.0);
  h.mg.apply(Vector(n, 0.0), z);
  for (double v : z) EXPECT_EQ(v, 0.0);

  const Vector a = testing::random_vector(n, 15), b = testing::random_vector(n, 16);
  Vector ab(n), pa(n), pb(n), pab(n);
  for (Index i = 0; i < n; ++i) ab[i] = 2.0 * a[i] - 3.0 * b[i];
  h.mg.apply(a, pa);
  h.mg.apply(b, pb);
  h.mg.apply(ab, pab);
  double scale = 0.0;
  for (Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(pab[i]));
  for (Index i = 0; i < n; ++i) EXPECT_NEAR(pab[i], 2.0 * pa[i] - 3.0 * pb[i], 1e-12 * scale);
}

TEST(Multigrid, IdenticalForAnyRankCount) {
  Vector ref_cycle, ref_smooth;
  for (int p : {1, 2, 4}) {
    Hierarchy h(2, p, GmgConfig{});
    const Vector r = testing::random_vector(h.fine.rows(), 18);
    Vector d(r.size(), 0.0), s(r.size(), 0.0);
    h.mg.v_cycle(d, r);
    h.mg.smooth(1, s, r);
    if (p == 1) {
      ref_cycle = d;
      ref_smooth = s;
      continue;
    }
    EXPECT_EQ(d, ref_cycle) << "p=" << p;
    EXPECT_EQ(s, ref_smooth) << "p=" << p;
  }
}

TEST(Multigrid, SetOperatorsMatchesUpdate) {
  Hierarchy h(2, 2, GmgConfig{});
  const ProblemData data = testing::stokes_data(h.mg.fine_layout(), 1e-3, 0.05);
  std::vector<DofLayout> layouts{h.mg.layout(0), h.mg.layout(1)};
  const auto mats = assemble_level_jacobians(h.mesh, layouts, data, Vector(h.fine.rows(), 0.0));
  Multigrid other(h.mesh, 2, 1, GmgConfig{});
  other.set_operators(mats);
  const Vector r = testing::random_vector(h.fine.rows(), 19);
  Vector a(r.size(), 0.0), b(r.size(), 0.0);
  h.mg.apply(r, a);
  other.apply(r, b);
  EXPECT_EQ(a, b);
  EXPECT_THROW(other.set_operators({mats[1], mats[1]}), Error);
}

TEST(Multigrid, DiagnosticsCsv) {
  GmgConfig cfg;
  cfg.diagnostics = true;
  Hierarchy h(3, 1, cfg);
  const Vector r = testing::random_vector(h.fine.rows(), 20);
  Vector d(r.size(), 0.0);
  h.mg.v_cycle(d, r);
  ASSERT_EQ(h.mg.diagnostics().size(), 2u);
  EXPECT_EQ(h.mg.diagnostics()[0].level, 1);
  EXPECT_EQ(h.mg.diagnostics()[1].level, 2);
  EXPECT_NEAR(h.mg.diagnostics()[1].before, norm2(r), 1e-12 * norm2(r));
  EXPECT_NEAR(h.mg.diagnostics()[1].after, h.residual(d, r), 1e-10 * norm2(r));
  std::ostringstream csv;
  h.mg.write_diagnostics_csv(csv);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "level,residual_before,residual_after");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

}  // namespace
}  // namespace stmg
