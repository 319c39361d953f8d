#include "egm/solver_engine.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <vector>

namespace egm {

namespace {

constexpr double kArmijoSlope = 1e-4;

std::vector<int> refine_free_set(const Vector& x, const Vector& g,
                                 const Vector& lo, const Vector& hi,
                                 double eps) {
  const int n = static_cast<int>(x.size());
  std::vector<char> at_lo(n), at_hi(n);
  std::vector<int> free;
  for (int i = 0; i < n; ++i) {
    at_lo[i] = x[i] <= lo[i] + eps;
    at_hi[i] = x[i] >= hi[i] - eps;
    if (!at_lo[i] && !at_hi[i]) free.push_back(i);
  }
  // Estimate the budget multiplier from the free coordinates, then release
  // bound coordinates whose reduced gradient pulls them inward.
  for (int pass = 0; pass < 2; ++pass) {
    double lambda = 0.0;
    if (!free.empty()) {
      for (int i : free) lambda += g[i];
      lambda /= static_cast<double>(free.size());
    } else {
      lambda = g.mean();
    }
    std::vector<int> next;
    for (int i = 0; i < n; ++i) {
      const double reduced = g[i] - lambda;
      const bool pinned =
          (at_lo[i] && reduced >= 0 && !at_hi[i]) ||
          (at_hi[i] && reduced <= 0 && !at_lo[i]) ||
          (at_lo[i] && at_hi[i]);
      if (!pinned) next.push_back(i);
    }
    if (next == free) break;
    free = std::move(next);
  }
  return free;
}

bool newton_direction(const Matrix& H, const Vector& g,
                      const std::vector<int>& free, Vector* p) {
  const int m = static_cast<int>(free.size());
  if (m < 2) return false;
  // Parametrize the zero-sum subspace of the free coordinates with the
  // basis columns e_j - e_{m-1}.
  Matrix Hff(m, m);
  Vector gf(m);
  for (int a = 0; a < m; ++a) {
    gf[a] = g[free[a]];
    for (int b = 0; b < m; ++b) Hff(a, b) = H(free[a], free[b]);
  }
  Matrix Z = Matrix::Zero(m, m - 1);
  for (int j = 0; j < m - 1; ++j) {
    Z(j, j) = 1.0;
    Z(m - 1, j) = -1.0;
  }
  Matrix Hr = Z.transpose() * Hff * Z;
  const Vector gr = Z.transpose() * gf;
  const double diag_scale = std::max(1e-12, Hr.diagonal().cwiseAbs().mean());
  double tau = 0.0;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Matrix Hd = Hr;
    if (tau > 0) Hd.diagonal().array() += tau;
    Eigen::LLT<Matrix> llt(Hd);
    if (llt.info() == Eigen::Success) {
      const Vector y = llt.solve(-gr);
      Vector pf = Z * y;
      p->setZero();
      for (int a = 0; a < m; ++a) (*p)[free[a]] = pf[a];
      if (g.dot(*p) < 0 && p->allFinite()) return true;
    }
    tau = tau == 0.0 ? 1e-10 * diag_scale : tau * 100.0;
  }
  return false;
}

}  // namespace

EngineResult minimize_over_budget_box(const EngineProblem& problem,
                                      const FeasibleSet& feasible,
                                      const Vector& start,
                                      const EngineOptions& options) {
  const int n = static_cast<int>(start.size());
  feasible.check(n);
  const Vector lo = feasible.effective_lower(n);
  const Vector hi = feasible.effective_upper(n);

  EngineResult result;
  Vector x = feasible.project(start);
  double fx = problem.value(x);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    const Vector g = problem.gradient(x);
    const Vector xc = feasible.project(x - g);
    result.kkt_residual = (x - xc).norm();
    if (result.kkt_residual < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    const double eps = 1e-10 * (1.0 + x.cwiseAbs().maxCoeff());
    const std::vector<int> free = refine_free_set(x, g, lo, hi, eps);

    Vector p(n);
    bool have_newton = false;
    if (problem.hessian && free.size() >= 2) {
      have_newton = newton_direction(problem.hessian(x), g, free, &p);
    }
    if (have_newton) {
      // Near-singular curvature can blow the direction far past the range
      // the backtracking search can recover within its halving budget.
      const double cap = 1e4 * std::max(1.0, (xc - x).norm());
      const double length = p.norm();
      if (length > cap) p *= cap / length;
    } else {
      p = xc - x;
    }

    // Armijo search along the projected path.
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector xn = feasible.project(x + alpha * p);
      const double fn = problem.value(xn);
      if (std::isfinite(fn) &&
          fn <= fx + kArmijoSlope * g.dot(xn - x)) {
        const double decrease = fx - fn;
        x = xn;
        fx = fn;
        accepted = true;
        if (decrease < options.objective_tolerance) {
          result.converged = true;
        }
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No acceptable step along either direction: treat as stalled.
      result.converged = result.kkt_residual < 1e2 * options.gradient_tolerance;
      break;
    }
    if (result.converged) break;
  }

  const Vector g = problem.gradient(x);
  result.kkt_residual = (x - feasible.project(x - g)).norm();
  if (result.kkt_residual < options.gradient_tolerance) result.converged = true;
  result.x = std::move(x);
  result.value = fx;
  return result;
}

}  // namespace egm
