#include "stmg/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

namespace stmg {

void FgmresConfig::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw Error("FgmresConfig: rel_tol must lie in (0,1)");
  if (max_iter < 1) throw Error("FgmresConfig: max_iter must be >= 1");
  if (restart < 0) throw Error("FgmresConfig: restart must be >= 0");
}

void NewtonConfig::validate() const {
  if (!(abs_tol > 0.0)) throw Error("NewtonConfig: abs_tol must be positive");
  if (!(rel_reduction > 1.0)) throw Error("NewtonConfig: rel_reduction must exceed 1");
  if (max_iter < 1) throw Error("NewtonConfig: max_iter must be >= 1");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw Error("NewtonConfig: backtrack must lie in (0,1)");
  if (max_trials < 1) throw Error("NewtonConfig: max_trials must be >= 1");
}

FgmresResult fgmres(const LinearOperator& a, std::span<const double> rhs,
                    const LinearOperator& preconditioner, const FgmresConfig& cfg,
                    std::span<const double> x0) {
  cfg.validate();
  const std::size_t n = rhs.size();
  FgmresResult result;
  result.x.assign(n, 0.0);
  if (!x0.empty()) {
    if (x0.size() != n) throw Error("fgmres: initial guess has wrong size");
    result.x.assign(x0.begin(), x0.end());
  }
  Vector r(n), w(n);
  auto residual = [&] {
    a(result.x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - w[i];
    return norm2(r);
  };
  const double bnorm = norm2(rhs);
  const double target = cfg.rel_tol * bnorm;
  double beta = x0.empty() ? bnorm : residual();
  if (x0.empty()) r.assign(rhs.begin(), rhs.end());
  result.residuals.push_back(beta);
  if (beta <= target || beta == 0.0) {
    result.converged = true;
    return result;
  }

  const int m = cfg.restart > 0 ? cfg.restart : cfg.max_iter;
  std::vector<Vector> v, z;
  std::vector<std::vector<double>> h;
  std::vector<double> cs, sn, g;
  while (result.iterations < cfg.max_iter) {
    v.assign(1, Vector(n));
    z.clear();
    h.assign(m + 1, std::vector<double>(m, 0.0));
    cs.assign(m, 0.0);
    sn.assign(m, 0.0);
    g.assign(m + 1, 0.0);
    g[0] = beta;
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    int used = 0;
    for (int j = 0; j < m && result.iterations < cfg.max_iter; ++j) {
      z.emplace_back(n);
      preconditioner(v[j], z[j]);
      a(z[j], w);
      for (int i = 0; i <= j; ++i) {
        h[i][j] = dot(w, v[i]);
        axpy(-h[i][j], v[i], w);
      }
      const double hn = norm2(w);
      h[j + 1][j] = hn;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
        h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
        h[i][j] = t;
      }
      const double denom = std::hypot(h[j][j], h[j + 1][j]);
      if (denom == 0.0) {
        // A z_j = 0: the Krylov space cannot be extended and the residual stays put
        ++result.iterations;
        result.residuals.push_back(std::abs(g[j]));
        result.breakdown = true;
        break;
      }
      cs[j] = h[j][j] / denom;
      sn[j] = h[j + 1][j] / denom;
      h[j][j] = denom;
      h[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++result.iterations;
      used = j + 1;
      const double est = std::abs(g[j + 1]);
      result.residuals.push_back(est);
      if (est <= target) {
        result.converged = true;
        break;
      }
      if (hn <= 1e-14 * denom) {
        result.breakdown = true;
        break;
      }
      v.emplace_back(n);
      for (std::size_t i = 0; i < n; ++i) v[j + 1][i] = w[i] / hn;
    }
    // y = H^{-1} g on the used upper triangle
    std::vector<double> y(used, 0.0);
    for (int i = used - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < used; ++k) s -= h[i][k] * y[k];
      y[i] = h[i][i] == 0.0 ? 0.0 : s / h[i][i];
    }
    for (int i = 0; i < used; ++i) axpy(y[i], z[i], result.x);
    if (result.converged || result.breakdown) break;
    beta = residual();
    if (beta <= target) {
      result.converged = true;
      break;
    }
  }
  if (!result.converged && !result.breakdown) {
    std::ostringstream msg;
    msg << "fgmres: no convergence after " << result.iterations << " iterations (residual "
        << result.residuals.back() << ", target " << target << ")";
    throw FgmresNotConverged(msg.str(), result.residuals);
  }
  return result;
}

SlabSolver::SlabSolver(const HierarchicalMesh& mesh, int r, int k, GmgConfig gmg,
                       FgmresConfig krylov_cfg, NewtonConfig newton_cfg)
    : krylov(krylov_cfg),
      newton(newton_cfg),
      mesh_(mesh),
      multigrid_(mesh, r, k, gmg),
      assembler_(mesh.finest(), multigrid_.fine_layout()) {
  krylov.validate();
  newton.validate();
}

NewtonStats SlabSolver::newton_solve(const ProblemData& data, Vector& x) {
  newton.validate();
  NewtonStats stats;
  Vector f = assembler_.residual(data, x);
  double norm = norm2(f);
  const double norm0 = norm;
  stats.residuals.push_back(norm);
  auto trace = [&] {
    std::ostringstream out;
    out << "residual history:";
    for (double v : stats.residuals) out << ' ' << v;
    return out.str();
  };

  const LinearOperator op = [&](std::span<const double> in, std::span<double> out) {
    multigrid_.multiply(in, out);
  };
  const LinearOperator prec = [&](std::span<const double> in, std::span<double> out) {
    multigrid_.apply(in, out);
  };
  Vector rhs(x.size()), trial(x.size());
  for (int it = 0; it < newton.max_iter; ++it) {
    multigrid_.update(data, x);
    for (std::size_t i = 0; i < x.size(); ++i) rhs[i] = -f[i];
    const FgmresResult lin = fgmres(op, rhs, prec, krylov);
    stats.gmres_iterations.push_back(lin.iterations);
    stats.gmres_total += lin.iterations;
    ++stats.iterations;

    double alpha = 1.0;
    bool accepted = false;
    Vector f_trial;
    double norm_trial = 0.0;
    for (int trialno = 0; trialno < newton.max_trials; ++trialno) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + alpha * lin.x[i];
      f_trial = assembler_.residual(data, trial);
      norm_trial = norm2(f_trial);
      if (norm_trial < norm || norm_trial <= newton.abs_tol) {
        accepted = true;
        break;
      }
      alpha *= newton.backtrack;
    }
    if (!accepted) {
      throw Error("newton: line search failed after " + std::to_string(newton.max_trials) +
                  " trials; " + trace());
    }
    x.swap(trial);
    f.swap(f_trial);
    norm = norm_trial;
    stats.residuals.push_back(norm);
    stats.step_lengths.push_back(alpha);
    if (norm <= newton.abs_tol || norm0 >= newton.rel_reduction * norm) return stats;
  }
  throw Error("newton: no convergence in " + std::to_string(newton.max_iter) + " steps; " + trace());
}

Vector end_velocity(const DofLayout& layout, std::span<const double> x) {
  const Index offset = layout.k * layout.block_size();
  return Vector(x.begin() + offset, x.begin() + offset + kDim * layout.num_nodes);
}

Vector warm_start(const DofLayout& layout, std::span<const double> v_minus,
                  std::span<const double> previous) {
  Vector x(layout.size(), 0.0);
  const Index vel = kDim * layout.num_nodes;
  for (int l = 0; l <= layout.k; ++l) {
    const Index offset = l * layout.block_size();
    std::copy(v_minus.begin(), v_minus.end(), x.begin() + offset);
    if (!previous.empty()) {
      std::copy(previous.begin() + offset + vel, previous.begin() + offset + layout.block_size(),
                x.begin() + offset + vel);
    }
  }
  return x;
}

Vector time_march(SlabSolver& solver, ProblemData data, const Vector& v0, int steps,
                  const std::function<void(const StepReport&, const Vector&)>& on_step) {
  const DofLayout& layout = solver.layout();
  if (static_cast<Index>(v0.size()) != kDim * layout.num_nodes) {
    throw Error("time_march: initial velocity has wrong size");
  }
  const double t0 = data.t_start;
  Vector v_minus = v0;
  Vector x;
  for (int n = 1; n <= steps; ++n) {
    const auto start = std::chrono::steady_clock::now();
    data.t_start = t0 + (n - 1) * data.tau;
    data.v_minus = v_minus;
    x = warm_start(layout, v_minus, x);
    StepReport report;
    report.step = n;
    report.t = t0 + n * data.tau;
    try {
      report.stats = solver.newton_solve(data, x);
    } catch (const Error& e) {
      throw Error("time step " + std::to_string(n) + " (t = " + std::to_string(report.t) +
                  "): " + e.what());
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v_minus = end_velocity(layout, x);
    if (on_step) on_step(report, x);
  }
  return x;
}

}  // namespace stmg
