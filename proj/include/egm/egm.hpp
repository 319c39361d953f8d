#pragma once

#include "egm/feasible.hpp"
#include "egm/gm_model.hpp"
#include "egm/solver_engine.hpp"

namespace egm {

/// Exponential-utility portfolio problem: minimize K(w, -gamma) subject to
/// the feasible set.
struct EgmProblem {
  GmModel model;
  double gamma = 1.0;
  FeasibleSet feasible;
};

using SolveOptions = EngineOptions;

struct SolveReport {
  Vector weights;
  double objective = 0.0;
  /// Per-component terms log pi_i - gamma mu_i^T w + (gamma^2/2) w^T Sigma_i w.
  Vector per_component;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
};

/// K(w, -gamma), the cumulant generating function at -gamma.
double egm_objective(const EgmProblem& problem, const Vector& w);
Vector egm_gradient(const EgmProblem& problem, const Vector& w);
/// Symmetric PSD Hessian of the objective.
Matrix egm_hessian(const EgmProblem& problem, const Vector& w);

SolveReport solve_egm(const EgmProblem& problem,
                      const SolveOptions& options = {});

/// Maximizes mu^T w - (gamma/2) w^T Sigma w over the feasible set.
/// The report's objective is the maximized risk-adjusted return.
SolveReport markowitz_solve(const Vector& mu, const Matrix& Sigma,
                            double gamma, const FeasibleSet& feasible,
                            const SolveOptions& options = {});

/// Limiting forms of K(w, -gamma)/gamma: `high` is the worst-case
/// risk-adjusted return max_i(-mu_i^T w + (gamma/2) w^T Sigma_i w), `low`
/// the Markowitz objective -mu^T w + (gamma/2) w^T Sigma w at the mixture
/// moments.
enum class LimitMode { high, low };
double egm_limit_objective(const EgmProblem& problem, const Vector& w,
                           LimitMode mode);

}  // namespace egm
