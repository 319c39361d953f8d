#include "egm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace egm {

namespace {

constexpr int kBootstrapResamples = 200;
constexpr int kDeltaGridPoints = 601;

/// Deliberately separate evaluation of the per-component exponents with
/// plain loops, so grid comparisons do not share code with the library's
/// objective.
double naive_component_exponent(const GmModel& m, const Vector& w, int i,
                                double scale) {
  double nu = 0.0;
  for (int a = 0; a < m.n; ++a) nu += w[a] * m.means[i][a];
  double s2 = 0.0;
  for (int a = 0; a < m.n; ++a) {
    for (int b = 0; b < m.n; ++b) s2 += w[a] * m.covariances[i](a, b) * w[b];
  }
  return std::log(m.weights[i]) - scale * nu + 0.5 * scale * scale * s2;
}

double naive_log_sum_exp(const std::vector<double>& u) {
  const double hi = *std::max_element(u.begin(), u.end());
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : u) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double naive_egm_objective(const GmModel& m, double gamma, const Vector& w) {
  std::vector<double> u(m.k);
  for (int i = 0; i < m.k; ++i) u[i] = naive_component_exponent(m, w, i, gamma);
  return naive_log_sum_exp(u);
}

double naive_evar_objective(const GmModel& m, double alpha, const Vector& w,
                            double delta) {
  std::vector<double> u(m.k);
  for (int i = 0; i < m.k; ++i) {
    u[i] = naive_component_exponent(m, w / delta, i, 1.0);
  }
  return delta * naive_log_sum_exp(u) - delta * std::log(alpha);
}

/// Enumerates the grid of the feasible set's first n-1 coordinates; the
/// last coordinate absorbs the budget.
template <typename Fn>
void for_each_grid_point(const FeasibleSet& feasible, int n, double resolution,
                         Fn&& visit) {
  const Vector lo = feasible.effective_lower(n);
  const Vector hi = feasible.effective_upper(n);
  const auto axis_count = [&](int i) {
    return static_cast<long>(std::floor((hi[i] - lo[i]) / resolution + 1e-9)) +
           1;
  };
  Vector w(n);
  if (n == 1) {
    w[0] = 1.0;
    if (w[0] >= lo[0] - 1e-12 && w[0] <= hi[0] + 1e-12) visit(w);
    return;
  }
  if (n == 2) {
    const long c0 = axis_count(0);
    for (long a = 0; a < c0; ++a) {
      w[0] = std::min(lo[0] + a * resolution, hi[0]);
      w[1] = 1.0 - w[0];
      if (w[1] >= lo[1] - 1e-12 && w[1] <= hi[1] + 1e-12) visit(w);
    }
    return;
  }
  const long c0 = axis_count(0);
  const long c1 = axis_count(1);
  for (long a = 0; a < c0; ++a) {
    w[0] = std::min(lo[0] + a * resolution, hi[0]);
    for (long b = 0; b < c1; ++b) {
      w[1] = std::min(lo[1] + b * resolution, hi[1]);
      w[2] = 1.0 - w[0] - w[1];
      if (w[2] >= lo[2] - 1e-12 && w[2] <= hi[2] + 1e-12) visit(w);
    }
  }
}

void check_grid_preconditions(const FeasibleSet& feasible, int n,
                              double resolution) {
  if (n > 3) {
    throw std::invalid_argument("grid search supports at most 3 assets");
  }
  if (!(resolution > 0) || resolution > 1e-2) {
    throw std::invalid_argument("grid resolution must lie in (0, 1e-2]");
  }
  if (!feasible.is_bounded(n)) {
    throw std::invalid_argument("grid search requires a bounded feasible set");
  }
}

}  // namespace

McEstimate mc_expected_utility(const GmModel& model, const Vector& w,
                               double gamma, long count, std::uint64_t seed) {
  if (count < 10000) {
    throw std::invalid_argument("mc_expected_utility: count must be >= 1e4");
  }
  const Matrix draws = sample(model, static_cast<int>(count), seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long t = 0; t < count; ++t) {
    const double r = draws.row(t).dot(w);
    const double u = 1.0 - std::exp(-gamma * r);
    sum += u;
    sum_sq += u * u;
  }
  McEstimate est;
  est.count = count;
  est.value = sum / count;
  const double var =
      std::max(0.0, (sum_sq - count * est.value * est.value) / (count - 1));
  est.std_error = std::sqrt(var / count);
  return est;
}

McEstimate mc_quantile(const GmModel& model, const Vector& w, double alpha,
                       long count, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("mc_quantile: alpha must lie in (0, 1)");
  }
  if (count * alpha < 100.0) {
    throw std::invalid_argument("mc_quantile: need count * alpha >= 100");
  }
  const Matrix draws = sample(model, static_cast<int>(count), seed);
  std::vector<double> returns(count);
  for (long t = 0; t < count; ++t) returns[t] = draws.row(t).dot(w);

  const long k = std::clamp(
      static_cast<long>(std::ceil(alpha * count)), 1L, count);
  const auto quantile_of = [&](std::vector<double>& values) {
    std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
    return values[k - 1];
  };

  std::vector<double> work = returns;
  McEstimate est;
  est.count = count;
  est.value = -quantile_of(work);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<long> pick(0, count - 1);
  std::vector<double> resample(count);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int b = 0; b < kBootstrapResamples; ++b) {
    for (long t = 0; t < count; ++t) resample[t] = returns[pick(rng)];
    const double q = -quantile_of(resample);
    sum += q;
    sum_sq += q * q;
  }
  const double mean = sum / kBootstrapResamples;
  const double var = std::max(
      0.0, (sum_sq - kBootstrapResamples * mean * mean) /
               (kBootstrapResamples - 1));
  est.std_error = std::sqrt(var);
  return est;
}

GridEgmResult grid_search_egm(const EgmProblem& problem, double resolution) {
  validate(problem.model);
  const int n = problem.model.n;
  problem.feasible.check(n);
  check_grid_preconditions(problem.feasible, n, resolution);

  GridEgmResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for_each_grid_point(problem.feasible, n, resolution, [&](const Vector& w) {
    const double value = naive_egm_objective(problem.model, problem.gamma, w);
    if (value < best.objective) {
      best.objective = value;
      best.weights = w;
    }
  });
  if (!std::isfinite(best.objective)) {
    throw std::runtime_error("grid_search_egm: empty grid");
  }
  return best;
}

GridEvarResult grid_search_evar(const EvarProblem& problem,
                                double resolution) {
  validate(problem.model);
  const int n = problem.model.n;
  problem.feasible.check(n);
  check_grid_preconditions(problem.feasible, n, resolution);

  std::vector<double> deltas(kDeltaGridPoints);
  const double lo = std::log(1e-3);
  const double hi = std::log(1e3);
  for (int j = 0; j < kDeltaGridPoints; ++j) {
    deltas[j] = std::exp(lo + (hi - lo) * j / (kDeltaGridPoints - 1));
  }

  GridEvarResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for_each_grid_point(problem.feasible, n, resolution, [&](const Vector& w) {
    for (double delta : deltas) {
      const double value =
          naive_evar_objective(problem.model, problem.alpha, w, delta);
      if (value < best.objective) {
        best.objective = value;
        best.weights = w;
        best.delta = delta;
      }
    }
  });
  if (!std::isfinite(best.objective)) {
    throw std::runtime_error("grid_search_evar: empty grid");
  }
  return best;
}

Vector finite_difference_gradient(
    const std::function<double(const Vector&)>& fn, const Vector& x,
    double step) {
  const int n = static_cast<int>(x.size());
  Vector g(n);
  Vector probe = x;
  for (int i = 0; i < n; ++i) {
    probe[i] = x[i] + step;
    const double up = fn(probe);
    probe[i] = x[i] - step;
    const double down = fn(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

}  // namespace egm
