#pragma once

#include <string>
#include <vector>

#include "egm/feasible.hpp"
#include "egm/gm_model.hpp"
#include "egm/graphform.hpp"

namespace egm {

/// Standard-form conic program: minimize c^T v subject to
/// A_eq v = b_eq and b_cone - A_cone v in the product cone.
/// Variable order is (w_0..w_{n-1}, delta, t, auxiliaries).
struct ConeProgram {
  std::vector<std::string> var_names;
  Vector c;
  Matrix A_eq;
  Vector b_eq;
  std::vector<std::string> eq_labels;
  Matrix A_cone;
  Vector b_cone;
  std::vector<Cone> cones;
  std::vector<std::string> cone_labels;

  int num_vars() const { return static_cast<int>(var_names.size()); }
  int index_of(const std::string& name) const;
};

/// Packages the assembled EVaR graph form with the budget equality, box
/// bounds, and the objective t - delta * log(alpha).
ConeProgram export_cone_program(const GmModel& model, double alpha,
                                const FeasibleSet& feasible);

/// Deterministic sectioned text form, suitable for golden-file diffs and
/// exact round-trips.
std::string cone_program_to_text(const ConeProgram& program);
ConeProgram cone_program_from_text(const std::string& text);

}  // namespace egm
