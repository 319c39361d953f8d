#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace egm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Gaussian mixture return model: component i is active with probability
/// weights[i], and the per-period return is then N(means[i], covariances[i]).
/// Covariances may be rank deficient or exactly zero (finite-values model).
struct GmModel {
  int n = 0;  ///< number of assets
  int k = 0;  ///< number of mixture components
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;

  /// True when every component covariance is exactly zero, i.e. the return
  /// takes only the values means[i] with probabilities weights[i].
  bool finite_values() const;
};

/// Component statistics of the scalar portfolio return w^T r.
struct ComponentProjection {
  Vector nus;      ///< nu_i = w^T mu_i
  Vector sigmas2;  ///< sigma_i^2 = w^T Sigma_i w, clipped at zero
};

/// Moment generating function value. On overflow the value is +infinity and
/// the flag is set instead of silently propagating a non-finite number.
struct MgfValue {
  double value = 0.0;
  bool overflow = false;
};

/// Checks invariants, renormalizes weights (if off by at most 1e-9) and
/// symmetrizes covariances. Throws std::invalid_argument otherwise.
GmModel validate(GmModel model);

ComponentProjection project(const GmModel& model, const Vector& w);

/// P(w^T r <= a). Zero-variance components contribute the exact step 1{a >= nu_i}.
double cdf(const GmModel& model, const Vector& w, double a);

/// E exp(t w^T r) = exp(cgf).
MgfValue mgf(const GmModel& model, const Vector& w, double t);

/// K(w, t) = log E exp(t w^T r), evaluated as a stabilized log-sum-exp of
/// log pi_i + t nu_i + t^2 sigma_i^2 / 2. Satisfies K(w, t) = K(t w, 1).
double cgf(const GmModel& model, const Vector& w, double t);

/// Mean and covariance of r under the mixture.
std::pair<Vector, Matrix> mixture_moments(const GmModel& model);

/// count x n matrix of return draws; deterministic given the seed.
Matrix sample(const GmModel& model, int count, std::uint64_t seed);

struct FitOptions {
  int restarts = 5;
  int max_iterations = 500;
  double tolerance = 1e-8;    ///< stop when |delta log-likelihood| drops below
  double ridge_scale = 1e-6;  ///< ridge = ridge_scale * mean data variance
  double min_weight = 1e-8;   ///< components below this are dropped
};

struct FitResult {
  GmModel model;
  double log_likelihood = 0.0;
  int iterations = 0;  ///< iterations of the winning restart
  std::vector<std::string> warnings;
};

/// Fits a k-component mixture to a T x n returns matrix by EM with covariance
/// ridge regularization and multiple restarts; returns the best fit found.
FitResult fit_em(const Matrix& returns, int k, std::uint64_t seed,
                 const FitOptions& options = {});

/// log(sum_i exp(u_i)) with max subtraction; -inf for an empty/all -inf input.
double log_sum_exp(const Vector& u);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace egm
