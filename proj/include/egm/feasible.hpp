#pragma once

#include <optional>

#include "egm/gm_model.hpp"

namespace egm {

/// Feasible weight set {w : 1^T w = 1, lower <= w <= upper}. Missing bounds
/// mean the corresponding side is unconstrained.
struct FeasibleSet {
  std::optional<Vector> lower;
  std::optional<Vector> upper;

  static FeasibleSet unbounded() { return {}; }
  static FeasibleSet box(Vector lo, Vector hi);
  static FeasibleSet long_only(int n);

  /// Lower bounds as a dense vector, -inf where absent.
  Vector effective_lower(int n) const;
  /// Upper bounds as a dense vector, +inf where absent.
  Vector effective_upper(int n) const;

  /// Throws std::invalid_argument if bounds are inconsistent or the set is
  /// empty (requires sum(lower) <= 1 <= sum(upper)).
  void check(int n) const;

  bool is_bounded(int n) const;
  bool contains(const Vector& w, double tol = 1e-8) const;

  /// Euclidean projection onto the set, via bisection on the budget
  /// multiplier. Requires a nonempty set.
  Vector project(const Vector& y) const;

  /// Some point of the set (projection of the equal-weight portfolio).
  Vector feasible_point(int n) const;
};

}  // namespace egm
