#pragma once

#include <string>

#include "egm/cone_program.hpp"
#include "egm/evar.hpp"

namespace egm {

enum class ConicStatus { optimal, max_iterations, unsupported };

struct ConicSolution {
  ConicStatus status = ConicStatus::unsupported;
  Vector v;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Interface for conic back ends: consumes a ConeProgram, returns primal
/// variables and a status.
class SolverAdapter {
 public:
  virtual ~SolverAdapter() = default;
  virtual std::string name() const = 0;
  virtual ConicSolution solve(const ConeProgram& program) = 0;
};

/// Placeholder adapter for fixture tests; always reports unsupported.
class NullAdapter : public SolverAdapter {
 public:
  std::string name() const override { return "null"; }
  ConicSolution solve(const ConeProgram& program) override;
};

/// First-order operator-splitting solver over the program's cones
/// (equality rows handled as a zero cone). Self-contained back end for
/// exponential-cone programs.
class AdmmConeSolver : public SolverAdapter {
 public:
  struct Options {
    double rho = 1.0;
    double over_relaxation = 1.6;
    /// Relative primal/dual residual target. The splitting iteration with
    /// approximate cone projections bottoms out near 1e-8.
    double tolerance = 1e-8;
    int max_iterations = 200000;
  };

  AdmmConeSolver() = default;
  explicit AdmmConeSolver(const Options& options) : options_(options) {}

  std::string name() const override { return "admm"; }
  ConicSolution solve(const ConeProgram& program) override;

 private:
  Options options_;
};

/// Solves the EVaR problem through the conic export and the given adapter,
/// then re-minimizes over delta at the recovered weights. Falls back with
/// converged=false when the adapter cannot solve the program.
EvarReport solve_evar_conic(const EvarProblem& problem, SolverAdapter& adapter,
                            const EvarOptions& options = {});

}  // namespace egm
