#include "egm/gm_model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace egm {

namespace {

struct EmState {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
  std::vector<Eigen::LLT<Matrix>> factors;
  std::vector<double> half_logdets;
};

void refactor(EmState& st) {
  const int k = static_cast<int>(st.means.size());
  st.factors.resize(k);
  st.half_logdets.resize(k);
  for (int i = 0; i < k; ++i) {
    st.factors[i].compute(st.covariances[i]);
    if (st.factors[i].info() != Eigen::Success) {
      throw std::runtime_error("EM covariance factorization failed");
    }
    double hld = 0.0;
    const auto& L = st.factors[i].matrixL();
    for (int j = 0; j < st.covariances[i].rows(); ++j) hld += std::log(L(j, j));
    st.half_logdets[i] = hld;
  }
}

/// Row t of log_resp gets log pi_i + log N(x_t; mu_i, Sigma_i); returns the
/// total log-likelihood.
double e_step(const Matrix& data, const EmState& st, Matrix& log_resp) {
  const int T = static_cast<int>(data.rows());
  const int n = static_cast<int>(data.cols());
  const int k = static_cast<int>(st.means.size());
  const double norm_const = -0.5 * n * std::log(2.0 * M_PI);
  double ll = 0.0;
  Vector row(k);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < k; ++i) {
      Vector d = data.row(t).transpose() - st.means[i];
      double q = st.factors[i].matrixL().solve(d).squaredNorm();
      row[i] = std::log(st.weights[i]) + norm_const - st.half_logdets[i] - 0.5 * q;
    }
    double lse = log_sum_exp(row);
    ll += lse;
    log_resp.row(t) = (row.array() - lse).transpose();
  }
  return ll;
}

}  // namespace

FitResult fit_em(const Matrix& returns, int k, std::uint64_t seed,
                 const FitOptions& options) {
  const int T = static_cast<int>(returns.rows());
  const int n = static_cast<int>(returns.cols());
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (T < k) throw std::invalid_argument("need at least k observations");
  if (!returns.allFinite()) throw std::invalid_argument("returns contain non-finite values");

  Vector data_mean = returns.colwise().mean().transpose();
  Matrix centered = returns.rowwise() - data_mean.transpose();
  Matrix data_cov = centered.transpose() * centered / static_cast<double>(T);
  double mean_diag = data_cov.trace() / n;
  double ridge = options.ridge_scale * (mean_diag > 0.0 ? mean_diag : 1.0);
  const Matrix ridge_mat = ridge * Matrix::Identity(n, n);

  FitResult best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(restart));

    EmState st;
    st.weights = Vector::Constant(k, 1.0 / k);
    std::vector<int> idx(T);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int i = 0; i < k; ++i) {
      st.means.push_back(returns.row(idx[i]).transpose());
      st.covariances.push_back(data_cov + ridge_mat);
    }
    refactor(st);

    std::vector<std::string> warnings;
    double prev_ll = -std::numeric_limits<double>::infinity();
    double ll = prev_ll;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
      int kc = static_cast<int>(st.means.size());
      Matrix log_resp(T, kc);
      ll = e_step(returns, st, log_resp);
      if (std::abs(ll - prev_ll) < options.tolerance) break;
      prev_ll = ll;

      Matrix resp = log_resp.array().exp();
      Vector counts = resp.colwise().sum().transpose();

      // drop degenerate components before the M step divides by their mass
      std::vector<int> keep;
      for (int i = 0; i < kc; ++i) {
        if (counts[i] / T < options.min_weight) {
          warnings.push_back("dropped degenerate component " + std::to_string(i));
        } else {
          keep.push_back(i);
        }
      }
      if (static_cast<int>(keep.size()) < kc) {
        EmState pruned;
        for (int i : keep) {
          pruned.means.push_back(st.means[i]);
          pruned.covariances.push_back(st.covariances[i]);
        }
        pruned.weights.resize(keep.size());
        for (size_t j = 0; j < keep.size(); ++j) pruned.weights[j] = st.weights[keep[j]];
        pruned.weights /= pruned.weights.sum();
        st = std::move(pruned);
        refactor(st);
        prev_ll = -std::numeric_limits<double>::infinity();
        continue;
      }

      for (int i = 0; i < kc; ++i) {
        Vector mu = (resp.col(i).transpose() * returns).transpose() / counts[i];
        Matrix cov = Matrix::Zero(n, n);
        for (int t = 0; t < T; ++t) {
          Vector d = returns.row(t).transpose() - mu;
          cov += resp(t, i) * (d * d.transpose());
        }
        cov = cov / counts[i] + ridge_mat;
        st.means[i] = mu;
        st.covariances[i] = ((cov + cov.transpose()) / 2.0).eval();
        st.weights[i] = counts[i] / T;
      }
      st.weights /= st.weights.sum();
      refactor(st);
    }

    if (ll > best.log_likelihood) {
      GmModel m;
      m.n = n;
      m.k = static_cast<int>(st.means.size());
      m.weights = st.weights;
      m.means = st.means;
      m.covariances = st.covariances;
      best.model = validate(std::move(m));
      best.log_likelihood = ll;
      best.iterations = iter;
      best.warnings = warnings;
    }
  }
  return best;
}

}  // namespace egm
