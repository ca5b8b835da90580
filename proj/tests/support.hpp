#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stmg/assembly.hpp"
#include "stmg/dofs.hpp"
#include "stmg/elements.hpp"
#include "stmg/mesh.hpp"
#include "stmg/sparse.hpp"

namespace stmg::testing {

inline HierarchicalMesh square_mesh(int n, int levels = 1, int ranks = 1) {
  HierarchicalMesh mesh = generate_rectangle_mesh({0.0, 0.0}, {1.0, 1.0}, n, n);
  for (int g = 1; g < levels; ++g) mesh.refine_uniform();
  mesh.partition(ranks);
  return mesh;
}

inline HierarchicalMesh dfg_mesh(int levels, int ranks = 1) {
  HierarchicalMesh mesh = generate_channel_mesh(ChannelGeometry::dfg_2d(), 1);
  for (int g = 1; g < levels; ++g) mesh.refine_uniform();
  mesh.partition(ranks);
  return mesh;
}

inline Vector random_vector(std::size_t n, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Eigen::MatrixXd dense(const CsrMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) m(i, a.col_idx()[p]) = a.values()[p];
  }
  return m;
}

inline Eigen::VectorXd as_eigen(const Vector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

/// Dense LU solve, the reference for every iterative solver check.
inline Vector dense_solve(const CsrMatrix& a, const Vector& rhs) {
  return as_vector(dense(a).fullPivLu().solve(as_eigen(rhs)));
}

inline double relative_residual(const CsrMatrix& a, const Vector& x, const Vector& rhs) {
  Vector y(rhs.size());
  a.multiply(x, y);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rhs[i] - y[i];
  return norm2(y) / norm2(rhs);
}

/// Zero-data problem with the convection switched off.
inline ProblemData stokes_data(const DofLayout& layout, double nu = 1.0, double tau = 0.1) {
  ProblemData data;
  data.nu = nu;
  data.tau = tau;
  data.convection = false;
  data.v_minus.assign(kDim * layout.num_nodes, 0.0);
  return data;
}

inline ProblemData navier_stokes_data(const DofLayout& layout, double nu = 0.05, double tau = 0.1) {
  ProblemData data = stokes_data(layout, nu, tau);
  data.convection = true;
  return data;
}

/// Analytic velocity/pressure pair with the derivatives needed to build the
/// forcing, Dirichlet datum and outflow traction (outflow normal (1, 0)).
struct Manufactured {
  std::function<Vec2(Vec2, double)> v;
  // grad[c] = gradient of component c
  std::function<std::array<Vec2, 2>(Vec2, double)> grad;
  std::function<Vec2(Vec2, double)> dvdt;
  std::function<Vec2(Vec2, double)> laplacian;
  std::function<double(Vec2, double)> p;
  std::function<Vec2(Vec2, double)> grad_p;

  void apply(ProblemData& data) const {
    const Manufactured m = *this;
    const bool convection = data.convection;
    const double nu = data.nu;
    data.force = [m, convection, nu](Vec2 x, double t) {
      const Vec2 dt = m.dvdt(x, t), lap = m.laplacian(x, t), gp = m.grad_p(x, t);
      Vec2 f{dt[0] - nu * lap[0] + gp[0], dt[1] - nu * lap[1] + gp[1]};
      if (convection) {
        const Vec2 v = m.v(x, t);
        const auto g = m.grad(x, t);
        for (int c = 0; c < 2; ++c) f[c] += v[0] * g[c][0] + v[1] * g[c][1];
      }
      return f;
    };
    data.dirichlet = [m](Vec2 x, double t, BoundaryTag) { return m.v(x, t); };
    data.traction = [m, nu](Vec2 x, double t) {
      const auto g = m.grad(x, t);
      return Vec2{nu * g[0][0] - m.p(x, t), nu * g[1][0]};
    };
  }
};

/// Coefficients of a scalar field in the mapped orthonormal pressure basis of
/// one cell, by quadrature on the reference cell.
inline std::vector<double> project_pressure(const MeshLevel& level, const DofLayout& layout, Index cell,
                                            const std::function<double(Vec2)>& p) {
  const auto rule = tensorize(gauss_quadrature(layout.r + 2));
  const PDiscBasis basis(layout.r - 1);
  std::vector<double> coef(layout.n_p, 0.0), psi(layout.n_p);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.eval(rule.points[q], psi);
    const double value = p(map_to_physical(level, cell, rule.points[q]));
    for (int a = 0; a < layout.n_p; ++a) coef[a] += rule.weights[q] * value * psi[a];
  }
  return coef;
}

/// Slab vector holding the interpolant of the exact solution at the temporal
/// nodes of (t0, t0 + tau).
inline Vector exact_slab(const MeshLevel& level, const DofLayout& layout, const Manufactured& m,
                         double t0, double tau) {
  const TemporalBasis tb(layout.k);
  Vector x(layout.size(), 0.0);
  for (int l = 0; l <= layout.k; ++l) {
    const double t = t0 + tau * tb.nodes()[l];
    for (Index n = 0; n < layout.num_nodes; ++n) {
      const Vec2 v = m.v(layout.node_points[n], t);
      x[layout.velocity_index(l, 0, n)] = v[0];
      x[layout.velocity_index(l, 1, n)] = v[1];
    }
    for (Index c = 0; c < layout.num_cells; ++c) {
      const auto coef = project_pressure(level, layout, c, [&](Vec2 y) { return m.p(y, t); });
      for (int a = 0; a < layout.n_p; ++a) x[layout.pressure_index(l, c, a)] = coef[a];
    }
  }
  return x;
}

inline Vector velocity_at(const DofLayout& layout, const Manufactured& m, double t) {
  return interpolate_velocity(layout, [&](Vec2 x) { return m.v(x, t); });
}

/// v = (1 + t) (y^2, x^2), p = (1 + t)(x + y): in Q_2 x P_1 and linear in time.
inline Manufactured polynomial_solution() {
  Manufactured m;
  m.v = [](Vec2 x, double t) { return Vec2{(1 + t) * x[1] * x[1], (1 + t) * x[0] * x[0]}; };
  m.grad = [](Vec2 x, double t) {
    return std::array<Vec2, 2>{Vec2{0.0, 2 * (1 + t) * x[1]}, Vec2{2 * (1 + t) * x[0], 0.0}};
  };
  m.dvdt = [](Vec2 x, double) { return Vec2{x[1] * x[1], x[0] * x[0]}; };
  m.laplacian = [](Vec2, double t) { return Vec2{2 * (1 + t), 2 * (1 + t)}; };
  m.p = [](Vec2 x, double t) { return (1 + t) * (x[0] + x[1]); };
  m.grad_p = [](Vec2, double t) { return Vec2{1 + t, 1 + t}; };
  return m;
}

/// Divergence-free trigonometric field, linear in time.
inline Manufactured smooth_solution() {
  constexpr double pi = std::numbers::pi;
  Manufactured m;
  m.v = [](Vec2 x, double t) {
    return Vec2{(1 + t) * std::sin(pi * x[0]) * std::cos(pi * x[1]),
                -(1 + t) * std::cos(pi * x[0]) * std::sin(pi * x[1])};
  };
  m.grad = [](Vec2 x, double t) {
    const double s0 = std::sin(pi * x[0]), c0 = std::cos(pi * x[0]);
    const double s1 = std::sin(pi * x[1]), c1 = std::cos(pi * x[1]);
    return std::array<Vec2, 2>{Vec2{(1 + t) * pi * c0 * c1, -(1 + t) * pi * s0 * s1},
                               Vec2{(1 + t) * pi * s0 * s1, -(1 + t) * pi * c0 * c1}};
  };
  m.dvdt = [](Vec2 x, double) {
    return Vec2{std::sin(pi * x[0]) * std::cos(pi * x[1]), -std::cos(pi * x[0]) * std::sin(pi * x[1])};
  };
  m.laplacian = [m](Vec2 x, double t) {
    const Vec2 v = m.v(x, t);
    return Vec2{-2 * pi * pi * v[0], -2 * pi * pi * v[1]};
  };
  m.p = [](Vec2 x, double t) { return (1 + t) * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  m.grad_p = [](Vec2 x, double t) {
    return Vec2{(1 + t) * pi * std::cos(pi * x[0]) * std::sin(pi * x[1]),
                (1 + t) * pi * std::sin(pi * x[0]) * std::cos(pi * x[1])};
  };
  return m;
}

/// Polygon area by the shoelace formula.
inline double shoelace(const std::vector<Vec2>& polygon) {
  double a = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2& p = polygon[i];
    const Vec2& q = polygon[(i + 1) % polygon.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * a;
}

}  // namespace stmg::testing
