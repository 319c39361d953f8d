#pragma once

#include <random>

#include "egm/gm_model.hpp"

namespace egm::testfx {

/// Two-asset, two-outcome model: the first asset returns -1 with
/// probability pi1 and +1 otherwise, the second asset is riskless with
/// zero return.
inline GmModel two_point_model(double pi1) {
  GmModel model;
  model.n = 2;
  model.k = 2;
  model.weights = Vector(2);
  model.weights << pi1, 1.0 - pi1;
  model.means = {Vector(2), Vector(2)};
  model.means[0] << -1.0, 0.0;
  model.means[1] << 1.0, 0.0;
  model.covariances = {Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
  return validate(model);
}

/// Random model with strictly positive-definite covariances on the scale
/// of monthly equity returns.
inline GmModel random_full_model(int n, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.2, 1.0);

  GmModel model;
  model.n = n;
  model.k = k;
  model.weights = Vector(k);
  for (int i = 0; i < k; ++i) model.weights[i] = uniform(rng);
  model.weights /= model.weights.sum();
  for (int i = 0; i < k; ++i) {
    Vector mu(n);
    for (int a = 0; a < n; ++a) mu[a] = 0.08 * normal(rng);
    Matrix B(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) B(a, b) = normal(rng);
    }
    Matrix Sigma = 0.02 * (B * B.transpose()) / n;
    Sigma.diagonal().array() += 0.01;
    model.means.push_back(mu);
    model.covariances.push_back(Sigma);
  }
  return validate(model);
}

/// Random k-outcome finite-values model (all covariances zero).
inline GmModel random_finite_model(int n, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.2, 1.0);

  GmModel model;
  model.n = n;
  model.k = k;
  model.weights = Vector(k);
  for (int i = 0; i < k; ++i) model.weights[i] = uniform(rng);
  model.weights /= model.weights.sum();
  for (int i = 0; i < k; ++i) {
    Vector mu(n);
    for (int a = 0; a < n; ++a) mu[a] = 0.4 * normal(rng);
    model.means.push_back(mu);
    model.covariances.push_back(Matrix::Zero(n, n));
  }
  return validate(model);
}

/// Random budget-feasible weight vector with entries of order one.
inline Vector random_weight(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(n);
  for (int a = 0; a < n; ++a) w[a] = normal(rng);
  w.array() += (1.0 - w.sum()) / n;
  return w;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace egm::testfx
