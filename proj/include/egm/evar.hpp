#pragma once

#include <string>

#include "egm/egm.hpp"
#include "egm/feasible.hpp"
#include "egm/gm_model.hpp"

namespace egm {

/// Entropic value-at-risk minimization problem at level alpha.
struct EvarProblem {
  GmModel model;
  double alpha = 0.05;
  FeasibleSet feasible;
};

enum class EvarMethod { alternating, approx, gaussian, conic };
std::string to_string(EvarMethod method);

struct EvarOptions {
  int max_outer = 100;
  double objective_tolerance = 1e-10;
  /// Smoothed-max temperature used by the approximate solver.
  double temperature = 1e-4;
  /// Options for the inner weight solves.
  SolveOptions inner;
};

struct EvarReport {
  Vector weights;
  double delta = 0.0;
  /// Implied risk aversion 1/delta.
  double lambda = 0.0;
  /// Exact objective delta * K(w/delta, -1) - delta * log(alpha) at the
  /// reported point, whichever method produced it.
  double evar_value = 0.0;
  double alpha = 0.0;
  EvarMethod method = EvarMethod::alternating;
  int iterations = 0;
  bool converged = false;
  /// Set when the optimum has zero portfolio variance and delta is
  /// undefined (reported as 0).
  bool degenerate = false;
  double kkt_residual = 0.0;
};

/// Perspective objective delta * K(w/delta, -1) - delta * log(alpha);
/// +infinity for delta <= 0.
double evar_objective(const EvarProblem& problem, const Vector& w,
                      double delta);

/// EVaR of the fixed portfolio w: minimum of evar_objective over delta > 0.
double evar_value(const EvarProblem& problem, const Vector& w);

/// The delta attaining evar_value(problem, w).
double evar_minimizing_delta(const EvarProblem& problem, const Vector& w);

/// Joint minimization by alternating delta line searches with weight
/// solves at gamma = 1/delta, started from the approximate solution.
EvarReport solve_evar_alternating(const EvarProblem& problem,
                                  const EvarOptions& options = {});

/// Minimizes the quadratic-over-linear lower bound
/// max_i(delta log(pi_i/alpha) - mu_i^T w + w^T Sigma_i w / (2 delta))
/// through its log-sum-exp smoothing, then polishes delta against the exact
/// objective at the returned weights.
EvarReport solve_evar_approx(const EvarProblem& problem,
                             const EvarOptions& options = {});

/// Single-Gaussian closed-form route: maximizes
/// mu^T w - sqrt(-2 log alpha) * sqrt(w^T Sigma w) and recovers delta from
/// the closed form.
EvarReport evar_gaussian_reduced(const Vector& mu, const Matrix& Sigma,
                                 double alpha, const FeasibleSet& feasible,
                                 const EvarOptions& options = {});

}  // namespace egm
