#include "egm/gm_model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace egm {

namespace {

constexpr double kWeightSumTol = 1e-9;
constexpr double kEigenvalueTol = 1e-10;
constexpr double kSigma2ClipTol = 1e-12;

/// Symmetric PSD square root with eigenvalues clipped at zero.
Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Deterministic standard normal stream (Box-Muller), independent of the
/// standard library's distribution internals.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = unit_open();
    double u2 = unit_open();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double uniform() { return unit_open(); }

 private:
  double unit_open() {
    // in (0, 1); never exactly 0 so log() stays finite
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace

bool GmModel::finite_values() const {
  for (const Matrix& cov : covariances) {
    if (!cov.isZero(0.0)) return false;
  }
  return true;
}

double log_sum_exp(const Vector& u) {
  if (u.size() == 0) return -std::numeric_limits<double>::infinity();
  double m = u.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf, or a +inf/nan argument
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) s += std::exp(u[i] - m);
  return m + std::log(s);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / M_SQRT2); }

GmModel validate(GmModel model) {
  const int n = model.n;
  const int k = model.k;
  if (n <= 0 || k <= 0) throw std::invalid_argument("model dimensions must be positive");
  if (model.weights.size() != k || static_cast<int>(model.means.size()) != k ||
      static_cast<int>(model.covariances.size()) != k) {
    throw std::invalid_argument("model arrays do not match k");
  }
  for (int i = 0; i < k; ++i) {
    if (model.means[i].size() != n) {
      throw std::invalid_argument("mean " + std::to_string(i) + " has wrong length");
    }
    if (model.covariances[i].rows() != n || model.covariances[i].cols() != n) {
      throw std::invalid_argument("covariance " + std::to_string(i) + " has wrong shape");
    }
    if (!(model.weights[i] > 0.0)) {
      throw std::invalid_argument("component weight " + std::to_string(i) +
                                  " must be positive");
    }
  }
  double sum = model.weights.sum();
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw std::invalid_argument("component weights sum to " + std::to_string(sum) +
                                ", expected 1");
  }
  model.weights /= sum;

  for (int i = 0; i < k; ++i) {
    Matrix& cov = model.covariances[i];
    cov = ((cov + cov.transpose()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -kEigenvalueTol) {
      throw std::invalid_argument("covariance " + std::to_string(i) +
                                  " has eigenvalue " + std::to_string(min_eig));
    }
  }
  return model;
}

ComponentProjection project(const GmModel& model, const Vector& w) {
  if (w.size() != model.n) throw std::invalid_argument("weight vector has wrong length");
  ComponentProjection p;
  p.nus.resize(model.k);
  p.sigmas2.resize(model.k);
  for (int i = 0; i < model.k; ++i) {
    p.nus[i] = w.dot(model.means[i]);
    double s2 = w.dot(model.covariances[i] * w);
    if (s2 < 0.0) {
      if (s2 < -kSigma2ClipTol) {
        throw std::invalid_argument("negative component variance " + std::to_string(s2));
      }
      s2 = 0.0;
    }
    p.sigmas2[i] = s2;
  }
  return p;
}

double cdf(const GmModel& model, const Vector& w, double a) {
  ComponentProjection p = project(model, w);
  double acc = 0.0;
  for (int i = 0; i < model.k; ++i) {
    if (p.sigmas2[i] == 0.0) {
      acc += model.weights[i] * (a >= p.nus[i] ? 1.0 : 0.0);
    } else {
      acc += model.weights[i] * normal_cdf((a - p.nus[i]) / std::sqrt(p.sigmas2[i]));
    }
  }
  return acc;
}

double cgf(const GmModel& model, const Vector& w, double t) {
  ComponentProjection p = project(model, w);
  Vector u(model.k);
  for (int i = 0; i < model.k; ++i) {
    u[i] = std::log(model.weights[i]) + t * p.nus[i] + 0.5 * t * t * p.sigmas2[i];
  }
  return log_sum_exp(u);
}

MgfValue mgf(const GmModel& model, const Vector& w, double t) {
  double k = cgf(model, w, t);
  // exp(709.79) is the last finite double
  if (k > 709.0) {
    return {std::numeric_limits<double>::infinity(), true};
  }
  return {std::exp(k), false};
}

std::pair<Vector, Matrix> mixture_moments(const GmModel& model) {
  Vector mu = Vector::Zero(model.n);
  for (int i = 0; i < model.k; ++i) mu += model.weights[i] * model.means[i];
  Matrix cov = Matrix::Zero(model.n, model.n);
  for (int i = 0; i < model.k; ++i) {
    Vector d = model.means[i] - mu;
    cov += model.weights[i] * (model.covariances[i] + d * d.transpose());
  }
  cov = ((cov + cov.transpose()) / 2.0).eval();
  return {mu, cov};
}

Matrix sample(const GmModel& model, int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample count must be nonnegative");
  std::vector<Matrix> roots;
  roots.reserve(model.k);
  for (const Matrix& cov : model.covariances) roots.push_back(psd_sqrt(cov));

  Vector cum(model.k);
  double acc = 0.0;
  for (int i = 0; i < model.k; ++i) {
    acc += model.weights[i];
    cum[i] = acc;
  }

  NormalStream stream(seed);
  Matrix out(count, model.n);
  Vector z(model.n);
  for (int row = 0; row < count; ++row) {
    double u = stream.uniform();
    int comp = 0;
    while (comp + 1 < model.k && u > cum[comp]) ++comp;
    for (int j = 0; j < model.n; ++j) z[j] = stream.next();
    out.row(row) = (model.means[comp] + roots[comp] * z).transpose();
  }
  return out;
}

}  // namespace egm
