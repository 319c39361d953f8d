#pragma once

#include <functional>
#include <string>
#include <vector>

#include "egm/gm_model.hpp"

namespace egm {

enum class ConeKind { zero, nonnegative, nonpositive, second_order, exponential };

std::string to_string(ConeKind kind);

/// One block of a product cone. Second-order blocks are ordered with the
/// radius coordinate last: (y, r) with |y| <= r. Exponential blocks are
/// (a, b, c) with b exp(a/b) <= c, b > 0, plus the b = 0 closure face.
struct Cone {
  ConeKind kind = ConeKind::zero;
  int dim = 0;
};

/// Projection of v onto the closed cone (Euclidean).
Vector project_onto_cone(const Vector& v, const Cone& cone);
/// Blockwise projection onto a product cone; dims must sum to v.size().
Vector project_onto_cones(const Vector& v, const std::vector<Cone>& cones);
double cone_distance(const Vector& v, const std::vector<Cone>& cones);

/// Cone-represented epigraph: f(x) <= t iff exists z with
/// F x + G z + t d + e in the product cone.
struct GraphForm {
  Matrix F;
  Matrix G;
  Vector d;
  Vector e;
  std::vector<Cone> cones;
  int n = 0;  // input dimension
  int m = 0;  // auxiliary dimension
  std::vector<std::string> row_labels;

  /// Direct evaluation of the represented function, when known.
  std::function<double(const Vector&)> eval;
  /// Analytic witness z certifying membership of (x, t); carried by the
  /// atoms and propagated through the calculus rules whenever every part
  /// supplies one.
  std::function<Vector(const Vector&, double)> witness;

  int rows() const { return static_cast<int>(F.rows()); }
};

/// g(x) = f(A x + b).
GraphForm gf_affine_pre(const GraphForm& gf, const Matrix& A, const Vector& b);
/// h(x) = a f(x) + b with a > 0.
GraphForm gf_affine_post(const GraphForm& gf, double a, double b);
/// K(w) = S(g_1(w), ..., g_k(w)); the outer form must be increasing in
/// each argument (caller-asserted). Auxiliaries stack as
/// (outer z, t_1..t_k, inner z's).
GraphForm gf_compose(const GraphForm& outer,
                     const std::vector<GraphForm>& inners);
/// p(x, s) = s f(x/s) for s > 0; input becomes (x, s).
GraphForm gf_perspective(const GraphForm& gf);

/// log-sum-exp atom: 3k+1 rows, cone R_- x C_exp^k, witness u_i = exp(x_i - t).
GraphForm gf_lse(int k);
/// x^T x atom: n+2 rows, one second-order cone, no auxiliaries.
GraphForm gf_quad(int n);

/// Graph form over (w, delta, t) of the perspective delta K(w/delta, -1),
/// built from the quadratic and log-sum-exp atoms through the calculus
/// rules. Each covariance receives a relative ridge to make it invertible;
/// throws if one is singular even so. Finite-values models (all covariances
/// exactly zero) take the affine route: the log-sum-exp arguments are
/// affine in w, so no quadratic atoms appear. alpha only participates at
/// cone program packaging and is validated here.
GraphForm assemble_evar_graphform(const GmModel& model, double alpha);

enum class Membership { member, non_member, indeterminate };

struct MembershipResult {
  Membership status = Membership::indeterminate;
  /// Cone distance of the best certificate found.
  double residual = 0.0;
  /// eval(x) - t when a direct evaluation is available, else NaN.
  double direct_excess = 0.0;
};

/// Decides whether (x, t) lies in the represented epigraph: member when a
/// certificate reaches residual < 1e-7, non-member when the direct
/// evaluation exceeds t by > 1e-6, indeterminate in between.
MembershipResult check_membership(const GraphForm& gf, const Vector& x,
                                  double t);

/// Smallest t with (x, t) in the epigraph, located by bisection on
/// certificate feasibility over [lo, hi]. Requires (x, hi) member.
double gf_minimize_t(const GraphForm& gf, const Vector& x, double lo,
                     double hi, double tol = 1e-9);

}  // namespace egm
