#include "egm/evar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "egm/solver_engine.hpp"

namespace egm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDeltaFloor = 1e-13;
constexpr double kDeltaCeil = 1e13;

void check_problem(const EvarProblem& problem) {
  validate(problem.model);
  if (!(problem.alpha > 0.0 && problem.alpha < 1.0)) {
    throw std::invalid_argument("evar: alpha must lie in (0, 1)");
  }
  problem.feasible.check(problem.model.n);
}

/// Gaussian closed-form delta at the mixture moments; cheap always-positive
/// bracket seed.
double delta_seed(const GmModel& model, double alpha, const Vector& w) {
  const auto [mu, Sigma] = mixture_moments(model);
  const double s2 = w.dot(Sigma * w);
  const double d = std::sqrt(std::max(0.0, s2) / (-2.0 * std::log(alpha)));
  return (std::isfinite(d) && d > 0) ? d : 1.0;
}

/// Golden-section minimization of a unimodal function of log(delta) on an
/// auto-expanded bracket around seed.
std::pair<double, double> minimize_log_axis(
    const std::function<double(double)>& phi, double seed) {
  double lo = std::clamp(seed, kDeltaFloor * 10, kDeltaCeil / 10);
  double hi = lo;
  while (lo > kDeltaFloor && phi(lo / 10) < phi(lo)) lo /= 10;
  while (hi < kDeltaCeil && phi(hi * 10) < phi(hi)) hi *= 10;
  lo = std::max(lo / 10, kDeltaFloor);
  hi = std::min(hi * 10, kDeltaCeil);

  const double inv_golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo);
  double b = std::log(hi);
  double x1 = b - inv_golden * (b - a);
  double x2 = a + inv_golden * (b - a);
  double f1 = phi(std::exp(x1));
  double f2 = phi(std::exp(x2));
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_golden * (b - a);
      f1 = phi(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_golden * (b - a);
      f2 = phi(std::exp(x2));
    }
  }
  const double delta = std::exp(0.5 * (a + b));
  return {delta, phi(delta)};
}

std::pair<double, double> minimize_delta(const EvarProblem& problem,
                                         const Vector& w) {
  const auto phi = [&](double d) { return evar_objective(problem, w, d); };
  return minimize_log_axis(phi, delta_seed(problem.model, problem.alpha, w));
}

/// Softmax terms of the exact objective at fixed delta.
struct ExactTerms {
  Vector u;
  Vector p;
  double lse = 0.0;
};

ExactTerms exact_terms(const GmModel& m, double delta, const Vector& w) {
  ExactTerms t;
  t.u.resize(m.k);
  for (int i = 0; i < m.k; ++i) {
    const double nu = m.means[i].dot(w);
    const double s2 = w.dot(m.covariances[i] * w);
    t.u[i] = std::log(m.weights[i]) - nu / delta + s2 / (2 * delta * delta);
  }
  t.lse = log_sum_exp(t.u);
  t.p = (t.u.array() - t.lse).exp();
  return t;
}

EngineProblem exact_weight_problem(const EvarProblem& problem, double delta) {
  const GmModel& m = problem.model;
  EngineProblem ep;
  ep.value = [&problem, delta](const Vector& w) {
    return evar_objective(problem, w, delta);
  };
  ep.gradient = [&m, delta](const Vector& w) {
    const ExactTerms t = exact_terms(m, delta, w);
    Vector g = Vector::Zero(m.n);
    for (int i = 0; i < m.k; ++i) {
      g += t.p[i] * (-m.means[i] + (m.covariances[i] * w) / delta);
    }
    return g;
  };
  ep.hessian = [&m, delta](const Vector& w) {
    const ExactTerms t = exact_terms(m, delta, w);
    Matrix H = Matrix::Zero(m.n, m.n);
    Vector gbar = Vector::Zero(m.n);
    for (int i = 0; i < m.k; ++i) {
      const Vector gi = -m.means[i] + (m.covariances[i] * w) / delta;
      H += t.p[i] * (m.covariances[i] / delta + gi * gi.transpose() / delta);
      gbar += t.p[i] * gi;
    }
    H -= gbar * gbar.transpose() / delta;
    return Matrix(0.5 * (H + H.transpose()));
  };
  return ep;
}

/// Quadratic-over-linear lower-bound terms h_i and their softmax at
/// temperature tau.
struct ApproxTerms {
  Vector h;
  Vector q;
  double value = 0.0;
};

ApproxTerms approx_terms(const GmModel& m, double alpha, double tau,
                         const Vector& w, double delta) {
  ApproxTerms t;
  t.h.resize(m.k);
  for (int i = 0; i < m.k; ++i) {
    const double nu = m.means[i].dot(w);
    const double s2 = w.dot(m.covariances[i] * w);
    t.h[i] = delta * std::log(m.weights[i] / alpha) - nu + s2 / (2 * delta);
  }
  const Vector scaled = t.h / tau;
  const double lse = log_sum_exp(scaled);
  t.q = (scaled.array() - lse).exp();
  t.value = tau * lse;
  return t;
}

}  // namespace

std::string to_string(EvarMethod method) {
  switch (method) {
    case EvarMethod::alternating: return "alternating";
    case EvarMethod::approx: return "approx";
    case EvarMethod::gaussian: return "gaussian";
    case EvarMethod::conic: return "conic";
  }
  return "unknown";
}

double evar_objective(const EvarProblem& problem, const Vector& w,
                      double delta) {
  if (!(delta > 0)) return kInf;
  return delta * cgf(problem.model, w / delta, -1.0) -
         delta * std::log(problem.alpha);
}

double evar_value(const EvarProblem& problem, const Vector& w) {
  check_problem(problem);
  return minimize_delta(problem, w).second;
}

double evar_minimizing_delta(const EvarProblem& problem, const Vector& w) {
  check_problem(problem);
  return minimize_delta(problem, w).first;
}

EvarReport solve_evar_alternating(const EvarProblem& problem,
                                  const EvarOptions& options) {
  check_problem(problem);
  EvarReport report = solve_evar_approx(problem, options);
  report.method = EvarMethod::alternating;
  report.converged = false;

  Vector w = report.weights;
  double delta = report.delta;
  double best = evar_objective(problem, w, delta);
  double kkt = report.kkt_residual;
  int outer = 0;
  for (outer = 1; outer <= options.max_outer; ++outer) {
    delta = minimize_delta(problem, w).first;
    const EngineProblem ep = exact_weight_problem(problem, delta);
    const EngineResult er =
        minimize_over_budget_box(ep, problem.feasible, w, options.inner);
    w = er.x;
    kkt = er.kkt_residual;
    if (best - er.value < options.objective_tolerance) {
      best = std::min(best, er.value);
      report.converged = true;
      break;
    }
    best = er.value;
  }
  report.weights = w;
  report.delta = delta;
  report.lambda = 1.0 / delta;
  report.evar_value = evar_objective(problem, w, delta);
  report.alpha = problem.alpha;
  report.iterations = std::min(outer, options.max_outer);
  report.kkt_residual = kkt;
  return report;
}

EvarReport solve_evar_approx(const EvarProblem& problem,
                             const EvarOptions& options) {
  check_problem(problem);
  const GmModel& m = problem.model;
  const double alpha = problem.alpha;
  const double tau = options.temperature;

  // Eliminate delta: minimize w |-> min_delta B(w, delta). The envelope is
  // convex, its gradient is the partial gradient at the inner minimizer, and
  // its Hessian is the Schur complement of the joint Hessian.
  const auto inner_delta = [&](const Vector& w) {
    const auto phi = [&](double d) {
      return approx_terms(m, alpha, tau, w, d).value;
    };
    return minimize_log_axis(phi, delta_seed(m, alpha, w));
  };

  EngineProblem ep;
  ep.value = [&](const Vector& w) { return inner_delta(w).second; };
  ep.gradient = [&](const Vector& w) {
    const double d = inner_delta(w).first;
    const ApproxTerms t = approx_terms(m, alpha, tau, w, d);
    Vector g = Vector::Zero(m.n);
    for (int i = 0; i < m.k; ++i) {
      g += t.q[i] * (-m.means[i] + (m.covariances[i] * w) / d);
    }
    return g;
  };
  ep.hessian = [&](const Vector& w) {
    const double d = inner_delta(w).first;
    const ApproxTerms t = approx_terms(m, alpha, tau, w, d);
    Matrix Hww = Matrix::Zero(m.n, m.n);
    Vector hwd = Vector::Zero(m.n);
    Vector gw_bar = Vector::Zero(m.n);
    double hdd = 0.0;
    double gd_bar = 0.0;
    for (int i = 0; i < m.k; ++i) {
      const Vector sw = m.covariances[i] * w;
      const double s2 = w.dot(sw);
      const Vector gw = -m.means[i] + sw / d;
      const double gd = std::log(m.weights[i] / alpha) - s2 / (2 * d * d);
      Hww += t.q[i] * (m.covariances[i] / d + gw * gw.transpose() / tau);
      hwd += t.q[i] * (-sw / (d * d) + gw * (gd / tau));
      hdd += t.q[i] * (s2 / (d * d * d) + gd * gd / tau);
      gw_bar += t.q[i] * gw;
      gd_bar += t.q[i] * gd;
    }
    Hww -= gw_bar * gw_bar.transpose() / tau;
    hwd -= gw_bar * (gd_bar / tau);
    hdd -= gd_bar * gd_bar / tau;
    if (hdd > 1e-12 * (1.0 + gd_bar * gd_bar)) {
      Hww -= hwd * hwd.transpose() / hdd;
    }
    return Matrix(0.5 * (Hww + Hww.transpose()));
  };

  const EngineResult er = minimize_over_budget_box(
      ep, problem.feasible, problem.feasible.feasible_point(m.n),
      options.inner);
  // Polish: keep the weights from the bound minimization but report delta and
  // the objective from the exact scalar problem at those weights.
  const auto [delta, value] = minimize_delta(problem, er.x);

  EvarReport report;
  report.weights = er.x;
  report.delta = delta;
  report.lambda = 1.0 / delta;
  report.evar_value = value;
  report.alpha = problem.alpha;
  report.method = EvarMethod::approx;
  report.iterations = er.iterations;
  report.converged = er.converged;
  report.kkt_residual = er.kkt_residual;
  return report;
}

EvarReport evar_gaussian_reduced(const Vector& mu, const Matrix& Sigma,
                                 double alpha, const FeasibleSet& feasible,
                                 const EvarOptions& options) {
  const int n = static_cast<int>(mu.size());
  if (Sigma.rows() != n || Sigma.cols() != n) {
    throw std::invalid_argument("evar_gaussian_reduced: dimension mismatch");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("evar_gaussian_reduced: alpha must lie in (0, 1)");
  }
  feasible.check(n);
  const Matrix S = 0.5 * (Sigma + Sigma.transpose());
  const double beta = std::sqrt(-2.0 * std::log(alpha));

  const auto stdev = [&](const Vector& w) {
    return std::sqrt(std::max(0.0, w.dot(S * w)));
  };
  EngineProblem ep;
  ep.value = [&](const Vector& w) { return -mu.dot(w) + beta * stdev(w); };
  ep.gradient = [&](const Vector& w) -> Vector {
    const double s = stdev(w);
    if (s < 1e-12) return -mu;
    return -mu + beta * (S * w) / s;
  };
  ep.hessian = [&](const Vector& w) -> Matrix {
    const double s = stdev(w);
    if (s < 1e-10) return Matrix::Zero(n, n);
    const Vector Sw = S * w;
    Matrix H = beta * (S / s - Sw * Sw.transpose() / (s * s * s));
    return Matrix(0.5 * (H + H.transpose()));
  };

  const EngineResult er = minimize_over_budget_box(
      ep, feasible, feasible.feasible_point(n), options.inner);

  EvarReport report;
  report.weights = er.x;
  report.alpha = alpha;
  report.method = EvarMethod::gaussian;
  report.iterations = er.iterations;
  report.converged = er.converged;
  report.kkt_residual = er.kkt_residual;
  const double s = stdev(er.x);
  report.evar_value = -mu.dot(er.x) + beta * s;
  if (s < 1e-10) {
    report.degenerate = true;
    report.delta = 0.0;
    report.lambda = kInf;
  } else {
    report.delta = s / beta;
    report.lambda = beta / s;
  }
  return report;
}

}  // namespace egm
