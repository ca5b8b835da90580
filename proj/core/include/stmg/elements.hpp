#pragma once

// Reference-element bases and quadrature rules.
//
// Conventions: the reference cell is [0,1]^2 and the reference time interval
// is [0,1]. Velocity shape functions are tensor-product Lagrange polynomials on
// equispaced nodes, numbered lexicographically (x fastest). Pressure shape
// functions are complete polynomials, orthonormal in L^2 on the reference cell.

#include <array>
#include <span>
#include <vector>

#include "stmg/types.hpp"

namespace stmg {

struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

struct QuadratureRule2D {
  std::vector<Vec2> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// n-point Gauss-Legendre rule on [0,1], exact for degree 2n-1. 1 <= n <= 10.
QuadratureRule gauss_quadrature(int n);

/// n-point right Gauss-Radau rule on [0,1]; t = 1 is the last node.
/// Exact for degree 2n-2. 1 <= n <= 5.
QuadratureRule gauss_radau_right(int n);

QuadratureRule2D tensorize(const QuadratureRule& rule);

/// One-dimensional Lagrange polynomials on a fixed node set.
class LagrangeBasis1D {
 public:
  explicit LagrangeBasis1D(std::vector<double> nodes);

  [[nodiscard]] int size() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }
  [[nodiscard]] double value(int i, double t) const;
  [[nodiscard]] double derivative(int i, double t) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> denominators_;
};

/// Tensor-product Lagrange basis Q_r on [0,1]^2.
class QBasis {
 public:
  explicit QBasis(int degree);

  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int size() const { return (degree_ + 1) * (degree_ + 1); }
  [[nodiscard]] Vec2 node(int i) const;

  /// values.size() and grads.size() must be size().
  void eval(Vec2 p, std::span<double> values, std::span<Vec2> grads) const;
  void eval_values(Vec2 p, std::span<double> values) const;

 private:
  int degree_;
  LagrangeBasis1D line_;
};

struct QBasisValues {
  std::vector<double> values;
  std::vector<Vec2> grads;
};

QBasisValues q_basis_eval(int degree, Vec2 ref_point);

/// Number of complete polynomials of total degree `degree` in `dim` variables.
int pressure_dofs_per_cell(int dim, int degree);

/// Discontinuous pressure basis: complete polynomials of a given degree,
/// orthonormalised over the monomials 1, x, y, x^2, xy, y^2, ... in graded
/// lexicographic order (Gram-Schmidt by Cholesky of the exact Gram matrix).
class PDiscBasis {
 public:
  explicit PDiscBasis(int degree);

  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int size() const { return static_cast<int>(exponents_.size()); }

  void eval(Vec2 p, std::span<double> values) const;

 private:
  int degree_;
  std::vector<std::array<int, 2>> exponents_;
  // row i: coefficients of basis function i in the monomial basis
  std::vector<double> coefficients_;
};

std::vector<double> p_disc_basis_eval(int degree, Vec2 ref_point);

/// Lagrange basis of P_k([0,1]) at the k+1 right Gauss-Radau nodes; the last
/// basis function is the one attached to the interval end point.
class TemporalBasis {
 public:
  explicit TemporalBasis(int k);

  [[nodiscard]] int degree() const { return k_; }
  [[nodiscard]] int size() const { return k_ + 1; }
  [[nodiscard]] const std::vector<double>& nodes() const { return basis_.nodes(); }
  [[nodiscard]] double value(int l, double s) const { return basis_.value(l, s); }
  [[nodiscard]] double derivative(int l, double s) const { return basis_.derivative(l, s); }

 private:
  int k_;
  LagrangeBasis1D basis_;
};

}  // namespace stmg
