#include "egm/feasible.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace egm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clipped_sum(const Vector& y, const Vector& lo, const Vector& hi,
                   double lambda) {
  double s = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    s += std::min(hi[i], std::max(lo[i], y[i] - lambda));
  }
  return s;
}

}  // namespace

FeasibleSet FeasibleSet::box(Vector lo, Vector hi) {
  FeasibleSet set;
  set.lower = std::move(lo);
  set.upper = std::move(hi);
  return set;
}

FeasibleSet FeasibleSet::long_only(int n) {
  return box(Vector::Zero(n), Vector::Constant(n, 1.0));
}

Vector FeasibleSet::effective_lower(int n) const {
  if (lower) return *lower;
  return Vector::Constant(n, -kInf);
}

Vector FeasibleSet::effective_upper(int n) const {
  if (upper) return *upper;
  return Vector::Constant(n, kInf);
}

void FeasibleSet::check(int n) const {
  if (lower && lower->size() != n) {
    throw std::invalid_argument("feasible set: lower bound has wrong length");
  }
  if (upper && upper->size() != n) {
    throw std::invalid_argument("feasible set: upper bound has wrong length");
  }
  const Vector lo = effective_lower(n);
  const Vector hi = effective_upper(n);
  for (int i = 0; i < n; ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      throw std::invalid_argument("feasible set: lower bound exceeds upper");
    }
  }
  double lo_sum = 0.0;
  double hi_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    lo_sum += lo[i];
    hi_sum += hi[i];
  }
  if (lo_sum > 1.0 + 1e-12 || hi_sum < 1.0 - 1e-12) {
    throw std::invalid_argument(
        "feasible set: budget constraint is infeasible under the bounds");
  }
}

bool FeasibleSet::is_bounded(int n) const {
  const Vector lo = effective_lower(n);
  const Vector hi = effective_upper(n);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) return false;
  }
  return true;
}

bool FeasibleSet::contains(const Vector& w, double tol) const {
  const int n = static_cast<int>(w.size());
  const Vector lo = effective_lower(n);
  const Vector hi = effective_upper(n);
  if (std::abs(w.sum() - 1.0) > tol) return false;
  for (int i = 0; i < n; ++i) {
    if (w[i] < lo[i] - tol || w[i] > hi[i] + tol) return false;
  }
  return true;
}

Vector FeasibleSet::project(const Vector& y) const {
  const int n = static_cast<int>(y.size());
  check(n);
  const Vector lo = effective_lower(n);
  const Vector hi = effective_upper(n);

  // clipped_sum is nonincreasing in lambda; bracket the root of
  // clipped_sum(lambda) = 1 and bisect.
  double lambda_lo = (y.sum() - 1.0) / n;
  double lambda_hi = lambda_lo;
  double step = 1.0 + std::abs(lambda_lo);
  while (clipped_sum(y, lo, hi, lambda_lo) < 1.0) {
    lambda_lo -= step;
    step *= 2.0;
    if (step > 1e300) break;
  }
  step = 1.0 + std::abs(lambda_hi);
  while (clipped_sum(y, lo, hi, lambda_hi) > 1.0) {
    lambda_hi += step;
    step *= 2.0;
    if (step > 1e300) break;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lambda_lo + lambda_hi);
    if (mid == lambda_lo || mid == lambda_hi) break;
    if (clipped_sum(y, lo, hi, mid) >= 1.0) {
      lambda_lo = mid;
    } else {
      lambda_hi = mid;
    }
  }
  const double lambda = 0.5 * (lambda_lo + lambda_hi);
  Vector w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = std::min(hi[i], std::max(lo[i], y[i] - lambda));
  }
  // Absorb the residual budget error into a coordinate with slack so the
  // equality constraint holds to machine precision.
  double gap = 1.0 - w.sum();
  for (int i = 0; i < n && gap != 0.0; ++i) {
    const double room = gap > 0 ? hi[i] - w[i] : lo[i] - w[i];
    const double move =
        gap > 0 ? std::min(gap, room) : std::max(gap, room);
    w[i] += move;
    gap -= move;
  }
  return w;
}

Vector FeasibleSet::feasible_point(int n) const {
  return project(Vector::Constant(n, 1.0 / n));
}

}  // namespace egm
