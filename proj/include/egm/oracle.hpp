#pragma once

#include <cstdint>
#include <functional>

#include "egm/egm.hpp"
#include "egm/evar.hpp"
#include "egm/gm_model.hpp"

namespace egm {

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long count = 0;
};

/// Sample mean and standard error of 1 - exp(-gamma * w^T r) over draws
/// from the model. Requires count >= 1e4.
McEstimate mc_expected_utility(const GmModel& model, const Vector& w,
                               double gamma, long count, std::uint64_t seed);

/// Value-at-risk estimate: negative empirical alpha-quantile of the
/// portfolio return, with a 200-resample bootstrap standard error.
/// Requires count * alpha >= 100.
McEstimate mc_quantile(const GmModel& model, const Vector& w, double alpha,
                       long count, std::uint64_t seed);

struct GridEgmResult {
  Vector weights;
  double objective = 0.0;
};

struct GridEvarResult {
  Vector weights;
  double delta = 0.0;
  double objective = 0.0;
};

/// Exhaustive search over the discretized feasible set (n <= 3, bounded,
/// resolution <= 1e-2). Evaluates the objective through its own code path.
GridEgmResult grid_search_egm(const EgmProblem& problem, double resolution);

/// As above, crossed with a log-spaced delta grid over [1e-3, 1e3].
GridEvarResult grid_search_evar(const EvarProblem& problem, double resolution);

/// Central finite differences, component-wise.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& fn,
                                  const Vector& x, double step);

}  // namespace egm
