#pragma once

#include <functional>

#include "egm/feasible.hpp"
#include "egm/gm_model.hpp"

namespace egm {

/// Smooth convex objective with optional second-order information.
struct EngineProblem {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  /// May be empty; the engine then falls back to projected gradient steps.
  std::function<Matrix(const Vector&)> hessian;
};

struct EngineOptions {
  int max_iterations = 1000;
  /// Stop when the projected gradient norm falls below this.
  double gradient_tolerance = 1e-8;
  /// Stop when an accepted step decreases the objective by less than this.
  double objective_tolerance = 1e-12;
};

struct EngineResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Projected gradient norm at the returned point.
  double kkt_residual = 0.0;
};

/// Minimizes the problem over {1^T x = 1, lower <= x <= upper} by Newton
/// steps on the free coordinates with an Armijo line search along the
/// projected path. Falls back to projected gradient steps when the Hessian
/// is unavailable or yields no descent.
EngineResult minimize_over_budget_box(const EngineProblem& problem,
                                      const FeasibleSet& feasible,
                                      const Vector& start,
                                      const EngineOptions& options = {});

}  // namespace egm
