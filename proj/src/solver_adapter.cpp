#include "egm/solver_adapter.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace egm {

ConicSolution NullAdapter::solve(const ConeProgram& program) {
  ConicSolution solution;
  solution.status = ConicStatus::unsupported;
  solution.v = Vector::Zero(program.num_vars());
  return solution;
}

ConicSolution AdmmConeSolver::solve(const ConeProgram& program) {
  const int nv = program.num_vars();
  const int neq = static_cast<int>(program.A_eq.rows());
  const int nc = static_cast<int>(program.A_cone.rows());
  const int p = neq + nc;

  Matrix A(p, nv);
  A.topRows(neq) = program.A_eq;
  A.bottomRows(nc) = program.A_cone;
  Vector b(p);
  b.head(neq) = program.b_eq;
  b.tail(nc) = program.b_cone;
  std::vector<Cone> cones;
  cones.push_back({ConeKind::zero, neq});
  cones.insert(cones.end(), program.cones.begin(), program.cones.end());

  const double rho = options_.rho;
  Matrix normal = rho * (A.transpose() * A);
  // Keep the regularization far below the residual tolerance: the ridge
  // shifts the fixed point, putting a floor under the attainable residuals.
  normal.diagonal().array() +=
      1e-12 * std::max(1.0, normal.diagonal().mean());
  const Eigen::LDLT<Matrix> factor(normal);
  if (factor.info() != Eigen::Success) {
    ConicSolution failed;
    failed.status = ConicStatus::unsupported;
    failed.v = Vector::Zero(nv);
    return failed;
  }

  Vector v = Vector::Zero(nv);
  Vector s = Vector::Zero(p);
  Vector u = Vector::Zero(p);
  const double relax = options_.over_relaxation;
  const double b_scale = 1.0 + b.norm();
  const double c_scale = 1.0 + program.c.norm();

  ConicSolution solution;
  for (int it = 1; it <= options_.max_iterations; ++it) {
    v = factor.solve(-program.c + rho * (A.transpose() * (b - s - u)));
    const Vector Av = A * v;
    const Vector Av_relaxed = relax * Av + (1.0 - relax) * (b - s);
    const Vector s_prev = s;
    s = project_onto_cones(b - Av_relaxed - u, cones);
    u += Av_relaxed + s - b;

    solution.iterations = it;
    if (it % 25 == 0 || it == options_.max_iterations) {
      solution.primal_residual = (Av + s - b).norm() / b_scale;
      solution.dual_residual =
          rho * (A.transpose() * (s - s_prev)).norm() / c_scale;
      if (solution.primal_residual < options_.tolerance &&
          solution.dual_residual < options_.tolerance) {
        solution.status = ConicStatus::optimal;
        break;
      }
    }
  }
  if (solution.status != ConicStatus::optimal) {
    solution.status = ConicStatus::max_iterations;
  }
  solution.v = v;
  solution.objective = program.c.dot(v);
  return solution;
}

EvarReport solve_evar_conic(const EvarProblem& problem, SolverAdapter& adapter,
                            const EvarOptions& options) {
  const ConeProgram program =
      export_cone_program(problem.model, problem.alpha, problem.feasible);
  const ConicSolution solution = adapter.solve(program);

  EvarReport report;
  report.method = EvarMethod::conic;
  report.alpha = problem.alpha;
  report.iterations = solution.iterations;
  if (solution.status == ConicStatus::unsupported) {
    report.weights = problem.feasible.feasible_point(problem.model.n);
    report.converged = false;
    report.delta = 0.0;
    report.lambda = 0.0;
    report.evar_value = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  const int n = problem.model.n;
  Vector w = solution.v.head(n);
  // The splitting solver satisfies the budget only to its tolerance;
  // re-project so downstream consumers see an exactly feasible point.
  w = problem.feasible.project(w);
  // Tighten delta at the recovered weights; the scalar problem is exact.
  double delta = evar_minimizing_delta(problem, w);
  const double splitter_delta = solution.v[program.index_of("delta")];
  if (splitter_delta > 0 &&
      evar_objective(problem, w, splitter_delta) <
          evar_objective(problem, w, delta)) {
    delta = splitter_delta;
  }

  report.weights = w;
  report.delta = delta;
  report.lambda = 1.0 / delta;
  report.evar_value = evar_objective(problem, w, delta);
  report.converged = solution.status == ConicStatus::optimal;
  report.kkt_residual = solution.primal_residual;
  return report;
}

}  // namespace egm
