#include "stmg/elements.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

namespace stmg {

namespace {

// Legendre polynomial P_n and its derivative on [-1,1].
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0;
  if (n == 0) return {1.0, 0.0};
  double p1 = x;
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  // derivative from the standard identity; |x| < 1 for all callers
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

double radau_function(int n, double x) {
  return legendre(n - 1, x).first - legendre(n, x).first;
}

}  // namespace

QuadratureRule gauss_quadrature(int n) {
  if (n < 1 || n > 10) {
    throw Error("gauss_quadrature: n must lie in [1,10], got " + std::to_string(n));
  }
  QuadratureRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // ascending order on [0,1]
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

QuadratureRule gauss_radau_right(int n) {
  if (n < 1 || n > 5) {
    throw Error("gauss_radau_right: n must lie in [1,5], got " + std::to_string(n));
  }
  std::vector<double> nodes;
  // Interior nodes are the roots of P_{n-1} - P_n in (-1,1); bracket by sampling.
  constexpr int kSamples = 4000;
  double prev_x = -1.0;
  double prev_f = radau_function(n, prev_x);
  for (int s = 1; s <= kSamples && static_cast<int>(nodes.size()) < n - 1; ++s) {
    const double x = -1.0 + 2.0 * s / (kSamples + 1);
    const double f = radau_function(n, x);
    if (prev_f == 0.0) {
      nodes.push_back(prev_x);
    } else if (prev_f * f < 0.0) {
      double a = prev_x;
      double b = x;
      double fa = prev_f;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = radau_function(n, m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      nodes.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_f = f;
  }
  nodes.push_back(1.0);
  if (static_cast<int>(nodes.size()) != n) {
    throw Error("gauss_radau_right: root bracketing failed");
  }

  QuadratureRule rule;
  rule.points.resize(n);
  for (int i = 0; i < n; ++i) rule.points[i] = 0.5 * (nodes[i] + 1.0);
  rule.points[n - 1] = 1.0;

  // Weights from the moment conditions sum_i w_i t_i^j = 1/(j+1), j < n.
  Eigen::MatrixXd v(n, n);
  Eigen::VectorXd moments(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) v(j, i) = std::pow(rule.points[i], j);
    moments(j) = 1.0 / (j + 1.0);
  }
  const Eigen::VectorXd w = v.fullPivLu().solve(moments);
  rule.weights.assign(w.data(), w.data() + n);
  return rule;
}

QuadratureRule2D tensorize(const QuadratureRule& rule) {
  QuadratureRule2D out;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    for (std::size_t i = 0; i < rule.size(); ++i) {
      out.points.push_back({rule.points[i], rule.points[j]});
      out.weights.push_back(rule.weights[i] * rule.weights[j]);
    }
  }
  return out;
}

LagrangeBasis1D::LagrangeBasis1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  denominators_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (j != i) d *= nodes_[i] - nodes_[j];
    }
    denominators_[i] = d;
  }
}

double LagrangeBasis1D::value(int i, double t) const {
  double v = 1.0;
  for (int j = 0; j < size(); ++j) {
    if (j != i) v *= t - nodes_[j];
  }
  return v / denominators_[i];
}

double LagrangeBasis1D::derivative(int i, double t) const {
  double sum = 0.0;
  for (int m = 0; m < size(); ++m) {
    if (m == i) continue;
    double prod = 1.0;
    for (int j = 0; j < size(); ++j) {
      if (j != i && j != m) prod *= t - nodes_[j];
    }
    sum += prod;
  }
  return sum / denominators_[i];
}

namespace {

std::vector<double> equispaced_nodes(int degree) {
  std::vector<double> nodes(degree + 1);
  for (int i = 0; i <= degree; ++i) nodes[i] = static_cast<double>(i) / degree;
  return nodes;
}

}  // namespace

QBasis::QBasis(int degree)
    : degree_(degree), line_(degree >= 1 ? equispaced_nodes(degree) : std::vector<double>{0.0}) {
  if (degree < 1 || degree > 8) {
    throw Error("QBasis: degree must lie in [1,8], got " + std::to_string(degree));
  }
}

Vec2 QBasis::node(int i) const {
  const int n = degree_ + 1;
  return {line_.nodes()[i % n], line_.nodes()[i / n]};
}

void QBasis::eval(Vec2 p, std::span<double> values, std::span<Vec2> grads) const {
  const int n = degree_ + 1;
  std::array<double, 16> vx{}, vy{}, dx{}, dy{};
  for (int i = 0; i < n; ++i) {
    vx[i] = line_.value(i, p[0]);
    vy[i] = line_.value(i, p[1]);
    dx[i] = line_.derivative(i, p[0]);
    dy[i] = line_.derivative(i, p[1]);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      values[i + n * j] = vx[i] * vy[j];
      grads[i + n * j] = {dx[i] * vy[j], vx[i] * dy[j]};
    }
  }
}

void QBasis::eval_values(Vec2 p, std::span<double> values) const {
  const int n = degree_ + 1;
  std::array<double, 16> vx{}, vy{};
  for (int i = 0; i < n; ++i) {
    vx[i] = line_.value(i, p[0]);
    vy[i] = line_.value(i, p[1]);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) values[i + n * j] = vx[i] * vy[j];
  }
}

QBasisValues q_basis_eval(int degree, Vec2 ref_point) {
  const QBasis basis(degree);
  QBasisValues out;
  out.values.resize(basis.size());
  out.grads.resize(basis.size());
  basis.eval(ref_point, out.values, out.grads);
  return out;
}

int pressure_dofs_per_cell(int dim, int degree) {
  // binomial(dim + degree, degree)
  long num = 1;
  long den = 1;
  for (int i = 1; i <= degree; ++i) {
    num *= dim + i;
    den *= i;
  }
  return static_cast<int>(num / den);
}

namespace {

// Integral over [0,1] of (2x-1)^a.
double shifted_moment(int a) { return a % 2 == 0 ? 1.0 / (a + 1.0) : 0.0; }

}  // namespace

PDiscBasis::PDiscBasis(int degree) : degree_(degree) {
  if (degree < 0 || degree > 6) {
    throw Error("PDiscBasis: degree must lie in [0,6], got " + std::to_string(degree));
  }
  for (int total = 0; total <= degree; ++total) {
    for (int ey = 0; ey <= total; ++ey) exponents_.push_back({total - ey, ey});
  }
  // Gram-Schmidt in graded-lex order is invariant under replacing x^a y^b by
  // (2x-1)^a (2y-1)^b: every prefix spans the same space and leading
  // coefficients stay positive. The shifted monomials are far better
  // conditioned.
  const int n = size();
  Eigen::MatrixXd gram(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      gram(a, b) = shifted_moment(exponents_[a][0] + exponents_[b][0]) *
                   shifted_moment(exponents_[a][1] + exponents_[b][1]);
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const Eigen::MatrixXd l_inv =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(n, n));
  coefficients_.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) coefficients_[i * n + j] = l_inv(i, j);
  }
}

void PDiscBasis::eval(Vec2 p, std::span<double> values) const {
  const int n = size();
  std::array<double, 8> px{}, py{};
  px[0] = py[0] = 1.0;
  const double sx = 2.0 * p[0] - 1.0;
  const double sy = 2.0 * p[1] - 1.0;
  for (int d = 1; d <= degree_; ++d) {
    px[d] = px[d - 1] * sx;
    py[d] = py[d - 1] * sy;
  }
  std::array<double, 36> mono{};
  for (int j = 0; j < n; ++j) mono[j] = px[exponents_[j][0]] * py[exponents_[j][1]];
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    for (int j = 0; j <= i; ++j) v += coefficients_[i * n + j] * mono[j];
    values[i] = v;
  }
}

std::vector<double> p_disc_basis_eval(int degree, Vec2 ref_point) {
  const PDiscBasis basis(degree);
  std::vector<double> values(basis.size());
  basis.eval(ref_point, values);
  return values;
}

TemporalBasis::TemporalBasis(int k) : k_(k), basis_(gauss_radau_right(k + 1).points) {
  if (k < 0) throw Error("TemporalBasis: negative degree");
}

}  // namespace stmg
