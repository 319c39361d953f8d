#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "egm/graphform.hpp"

namespace egm {

namespace {

/// Closed exponential cone: {(a,b,c) | b e^{a/b} <= c, b > 0} plus the
/// face {(a,0,c) | a <= 0, c >= 0}. The membership tests accept a small
/// relative slack so points on the boundary, which round a few ulps to
/// either side, project to themselves instead of entering the parametric
/// search below, whose flat optimum localizes only to sqrt(eps).
bool in_exp_cone(double a, double b, double c) {
  if (b > 0) {
    const double slack = 1e-12 * std::max({1.0, std::abs(a), b, std::abs(c)});
    return c > 0 && a <= b * std::log(c / b) + slack;
  }
  return b == 0 && a <= 0 && c >= 0;
}

/// Dual cone {(u,v,w) | -u e^{v/u} <= e w, u < 0} plus {(0,v,w) | v,w >= 0}.
bool in_exp_dual_cone(double u, double v, double w) {
  if (u < 0) {
    const double lhs = std::log(-u) + v / u;
    const double rhs = 1.0 + std::log(w);
    const double slack = 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return w > 0 && lhs <= rhs + slack;
  }
  return u == 0 && v >= 0 && w >= 0;
}

/// Projection onto the exponential cone. Points outside the cone and its
/// polar project onto the boundary, parametrized by rays through
/// (a, 1, e^a); the b = 0 face is kept as a separate candidate.
Eigen::Vector3d project_exp(const Eigen::Vector3d& v) {
  const double r = v[0], s = v[1], t = v[2];
  if (in_exp_cone(r, s, t)) return v;
  if (in_exp_dual_cone(-r, -s, -t)) return Eigen::Vector3d::Zero();
  if (r <= 0 && s <= 0) {
    return {r, 0.0, std::max(t, 0.0)};
  }

  // Inner product of v with the unit-b boundary ray at parameter a, and the
  // squared ray norm.
  const auto ray_gain = [&](double a) {
    const double E = std::exp(a);
    const double N = a * r + s + E * t;
    const double Q = a * a + 1.0 + E * E;
    return N > 0 ? N * N / Q : 0.0;
  };

  double best_a = 0.0;
  double best_gain = ray_gain(0.0);
  for (int j = 0; j <= 200; ++j) {
    const double a = -50.0 + 0.5 * j;
    const double gain = ray_gain(a);
    if (gain > best_gain) {
      best_gain = gain;
      best_a = a;
    }
  }
  double lo = best_a - 0.5;
  double hi = best_a + 0.5;
  const double inv_golden = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_golden * (hi - lo);
  double x2 = lo + inv_golden * (hi - lo);
  double f1 = ray_gain(x1);
  double f2 = ray_gain(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_golden * (hi - lo);
      f1 = ray_gain(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_golden * (hi - lo);
      f2 = ray_gain(x2);
    }
  }
  const double a = 0.5 * (lo + hi);
  const double E = std::exp(a);
  const double Q = a * a + 1.0 + E * E;
  const double y = std::max(0.0, (a * r + s + E * t) / Q);
  Eigen::Vector3d ray_candidate(y * a, y, y * E);

  Eigen::Vector3d face_candidate(std::min(r, 0.0), 0.0, std::max(t, 0.0));
  const double ray_dist = (v - ray_candidate).squaredNorm();
  const double face_dist = (v - face_candidate).squaredNorm();
  return ray_dist <= face_dist ? ray_candidate : face_candidate;
}

Vector project_soc(const Vector& v) {
  const int n = static_cast<int>(v.size());
  const double radius = v[n - 1];
  const double norm = v.head(n - 1).norm();
  if (norm <= radius) return v;
  if (norm <= -radius) return Vector::Zero(n);
  const double scale = 0.5 * (1.0 + radius / norm);
  Vector out(n);
  out.head(n - 1) = scale * v.head(n - 1);
  out[n - 1] = scale * norm;
  return out;
}

}  // namespace

std::string to_string(ConeKind kind) {
  switch (kind) {
    case ConeKind::zero: return "zero";
    case ConeKind::nonnegative: return "nonnegative";
    case ConeKind::nonpositive: return "nonpositive";
    case ConeKind::second_order: return "second-order";
    case ConeKind::exponential: return "exponential";
  }
  return "unknown";
}

Vector project_onto_cone(const Vector& v, const Cone& cone) {
  if (cone.dim != v.size()) {
    throw std::invalid_argument("cone projection: dimension mismatch");
  }
  switch (cone.kind) {
    case ConeKind::zero:
      return Vector::Zero(v.size());
    case ConeKind::nonnegative:
      return v.cwiseMax(0.0);
    case ConeKind::nonpositive:
      return v.cwiseMin(0.0);
    case ConeKind::second_order:
      return project_soc(v);
    case ConeKind::exponential: {
      if (cone.dim != 3) {
        throw std::invalid_argument("exponential cone must have dim 3");
      }
      return project_exp(Eigen::Vector3d(v[0], v[1], v[2]));
    }
  }
  throw std::invalid_argument("unknown cone kind");
}

Vector project_onto_cones(const Vector& v, const std::vector<Cone>& cones) {
  Vector out(v.size());
  int offset = 0;
  for (const Cone& cone : cones) {
    out.segment(offset, cone.dim) =
        project_onto_cone(v.segment(offset, cone.dim), cone);
    offset += cone.dim;
  }
  if (offset != v.size()) {
    throw std::invalid_argument("cone dims do not sum to vector length");
  }
  return out;
}

double cone_distance(const Vector& v, const std::vector<Cone>& cones) {
  return (v - project_onto_cones(v, cones)).norm();
}

}  // namespace egm
