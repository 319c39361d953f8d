#include "egm/egm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace egm {

namespace {

struct MixtureTerms {
  Vector u;  // per-component exponents
  Vector p;  // softmax weights
  double lse = 0.0;
};

MixtureTerms mixture_terms(const GmModel& model, double gamma,
                           const Vector& w) {
  MixtureTerms t;
  t.u.resize(model.k);
  for (int i = 0; i < model.k; ++i) {
    const double nu = model.means[i].dot(w);
    const double s2 = w.dot(model.covariances[i] * w);
    t.u[i] = std::log(model.weights[i]) - gamma * nu +
             0.5 * gamma * gamma * s2;
  }
  t.lse = log_sum_exp(t.u);
  t.p = (t.u.array() - t.lse).exp();
  return t;
}

Vector component_gradient(const GmModel& model, double gamma, const Vector& w,
                          int i) {
  return -gamma * model.means[i] + gamma * gamma * (model.covariances[i] * w);
}

Vector vertex_probe_start(const FeasibleSet& feasible, int n,
                          unsigned long long mask) {
  const Vector lo = feasible.effective_lower(n);
  const Vector hi = feasible.effective_upper(n);
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = (mask >> i) & 1u ? hi[i] : lo[i];
  }
  return feasible.project(v);
}

SolveReport run_engine(const EngineProblem& ep, const FeasibleSet& feasible,
                       int n, const SolveOptions& options) {
  EngineResult best =
      minimize_over_budget_box(ep, feasible, feasible.feasible_point(n),
                               options);
  // Probe projected box vertices; a strictly better probe restarts the
  // solver from there.
  if (feasible.is_bounded(n) && n <= 10) {
    const unsigned long long count = 1ull << n;
    for (unsigned long long mask = 0; mask < count; ++mask) {
      const Vector start = vertex_probe_start(feasible, n, mask);
      if (ep.value(start) < best.value - 1e-12) {
        EngineResult alt = minimize_over_budget_box(ep, feasible, start,
                                                    options);
        if (alt.value < best.value) best = alt;
      }
    }
  }
  SolveReport report;
  report.weights = best.x;
  report.objective = best.value;
  report.iterations = best.iterations;
  report.converged = best.converged;
  report.kkt_residual = best.kkt_residual;
  return report;
}

}  // namespace

double egm_objective(const EgmProblem& problem, const Vector& w) {
  return cgf(problem.model, w, -problem.gamma);
}

Vector egm_gradient(const EgmProblem& problem, const Vector& w) {
  const MixtureTerms t = mixture_terms(problem.model, problem.gamma, w);
  Vector g = Vector::Zero(problem.model.n);
  for (int i = 0; i < problem.model.k; ++i) {
    g += t.p[i] * component_gradient(problem.model, problem.gamma, w, i);
  }
  return g;
}

Matrix egm_hessian(const EgmProblem& problem, const Vector& w) {
  const GmModel& m = problem.model;
  const double gamma = problem.gamma;
  const MixtureTerms t = mixture_terms(m, gamma, w);
  Matrix H = Matrix::Zero(m.n, m.n);
  Vector g = Vector::Zero(m.n);
  for (int i = 0; i < m.k; ++i) {
    const Vector gi = component_gradient(m, gamma, w, i);
    H += t.p[i] * (gamma * gamma * m.covariances[i] + gi * gi.transpose());
    g += t.p[i] * gi;
  }
  H -= g * g.transpose();
  return 0.5 * (H + H.transpose());
}

SolveReport solve_egm(const EgmProblem& problem, const SolveOptions& options) {
  validate(problem.model);
  if (!(problem.gamma > 0)) {
    throw std::invalid_argument("solve_egm: gamma must be positive");
  }
  problem.feasible.check(problem.model.n);

  EngineProblem ep;
  ep.value = [&](const Vector& w) { return egm_objective(problem, w); };
  ep.gradient = [&](const Vector& w) { return egm_gradient(problem, w); };
  ep.hessian = [&](const Vector& w) { return egm_hessian(problem, w); };

  SolveReport report = run_engine(ep, problem.feasible, problem.model.n,
                                  options);
  report.per_component =
      mixture_terms(problem.model, problem.gamma, report.weights).u;
  return report;
}

SolveReport markowitz_solve(const Vector& mu, const Matrix& Sigma,
                            double gamma, const FeasibleSet& feasible,
                            const SolveOptions& options) {
  const int n = static_cast<int>(mu.size());
  if (Sigma.rows() != n || Sigma.cols() != n) {
    throw std::invalid_argument("markowitz_solve: dimension mismatch");
  }
  if (!(gamma > 0)) {
    throw std::invalid_argument("markowitz_solve: gamma must be positive");
  }
  feasible.check(n);
  const Matrix S = 0.5 * (Sigma + Sigma.transpose());

  EngineProblem ep;
  ep.value = [&](const Vector& w) {
    return -mu.dot(w) + 0.5 * gamma * w.dot(S * w);
  };
  ep.gradient = [&](const Vector& w) -> Vector { return -mu + gamma * (S * w); };
  ep.hessian = [&](const Vector&) -> Matrix { return gamma * S; };

  SolveReport report = run_engine(ep, feasible, n, options);
  report.objective = -report.objective;
  report.per_component = Vector();
  return report;
}

double egm_limit_objective(const EgmProblem& problem, const Vector& w,
                           LimitMode mode) {
  const GmModel& m = problem.model;
  const double gamma = problem.gamma;
  if (mode == LimitMode::high) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.k; ++i) {
      const double value = -m.means[i].dot(w) +
                           0.5 * gamma * w.dot(m.covariances[i] * w);
      best = std::max(best, value);
    }
    return best;
  }
  const auto [mu, Sigma] = mixture_moments(m);
  return -mu.dot(w) + 0.5 * gamma * w.dot(Sigma * w);
}

}  // namespace egm
