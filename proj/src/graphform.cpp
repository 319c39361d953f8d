#include "egm/graphform.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace egm {

namespace {

constexpr double kMemberResidual = 1e-7;
constexpr double kNonMemberExcess = 1e-6;

int total_cone_dim(const std::vector<Cone>& cones) {
  int p = 0;
  for (const Cone& cone : cones) p += cone.dim;
  return p;
}

void check_consistent(const GraphForm& gf) {
  const int p = gf.rows();
  if (gf.G.rows() != p || gf.d.size() != p || gf.e.size() != p ||
      gf.F.cols() != gf.n || gf.G.cols() != gf.m ||
      total_cone_dim(gf.cones) != p ||
      static_cast<int>(gf.row_labels.size()) != p) {
    throw std::invalid_argument("graph form: inconsistent dimensions");
  }
}

/// Minimizes 0.5 * dist(q + G z, C)^2 over z by gradient descent with
/// Barzilai-Borwein steps and a monotone backtracking safeguard. Returns
/// the best cone distance found; z is updated in place for warm starts.
double minimize_violation(const Vector& q, const Matrix& G,
                          const std::vector<Cone>& cones, Vector* z,
                          double target_residual) {
  const auto value_of = [&](const Vector& zz) {
    const Vector r = q + G * zz;
    return 0.5 * (r - project_onto_cones(r, cones)).squaredNorm();
  };
  const auto gradient_of = [&](const Vector& zz) -> Vector {
    const Vector r = q + G * zz;
    return G.transpose() * (r - project_onto_cones(r, cones));
  };

  double value = value_of(*z);
  double step = 1.0 / std::max(1e-12, G.squaredNorm());
  Vector grad = gradient_of(*z);
  for (int it = 0; it < 4000; ++it) {
    if (std::sqrt(2.0 * value) < 0.3 * target_residual) break;
    const double grad_norm = grad.norm();
    if (grad_norm < 1e-15 * (1.0 + z->norm())) break;

    double trial = step;
    Vector z_next;
    double value_next = value;
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      z_next = *z - trial * grad;
      value_next = value_of(z_next);
      if (value_next <= value - 1e-4 * trial * grad_norm * grad_norm) {
        accepted = true;
        break;
      }
      trial *= 0.5;
    }
    if (!accepted) break;

    const Vector grad_next = gradient_of(z_next);
    const Vector s = z_next - *z;
    const Vector y = grad_next - grad;
    const double sy = s.dot(y);
    step = sy > 1e-300 ? s.squaredNorm() / sy : trial;
    *z = z_next;
    value = value_next;
    grad = grad_next;
  }
  return std::sqrt(2.0 * value);
}

/// Cone distance of the best certificate for (x, t), optionally warm
/// starting the auxiliary search.
double certificate_residual(const GraphForm& gf, const Vector& x, double t,
                            Vector* warm, double target_residual) {
  const Vector q = gf.F * x + t * gf.d + gf.e;
  if (gf.m == 0) return cone_distance(q, gf.cones);
  if (gf.witness) {
    const Vector z = gf.witness(x, t);
    return cone_distance(q + gf.G * z, gf.cones);
  }
  Vector local = Vector::Zero(gf.m);
  Vector* z = warm != nullptr ? warm : &local;
  if (z->size() != gf.m) *z = Vector::Zero(gf.m);
  return minimize_violation(q, gf.G, gf.cones, z, target_residual);
}

}  // namespace

GraphForm gf_affine_pre(const GraphForm& gf, const Matrix& A,
                        const Vector& b) {
  check_consistent(gf);
  if (A.rows() != gf.n || b.size() != gf.n) {
    throw std::invalid_argument("gf_affine_pre: dimension mismatch");
  }
  GraphForm out = gf;
  out.n = static_cast<int>(A.cols());
  out.F = gf.F * A;
  out.e = gf.F * b + gf.e;
  if (gf.eval) {
    out.eval = [inner = gf.eval, A, b](const Vector& x) {
      return inner(A * x + b);
    };
  }
  if (gf.witness) {
    out.witness = [inner = gf.witness, A, b](const Vector& x, double t) {
      return inner(A * x + b, t);
    };
  }
  return out;
}

GraphForm gf_affine_post(const GraphForm& gf, double a, double b) {
  check_consistent(gf);
  if (!(a > 0)) {
    throw std::invalid_argument("gf_affine_post: scale must be positive");
  }
  GraphForm out = gf;
  out.d = gf.d / a;
  out.e = gf.e - (b / a) * gf.d;
  if (gf.eval) {
    out.eval = [inner = gf.eval, a, b](const Vector& x) {
      return a * inner(x) + b;
    };
  }
  if (gf.witness) {
    out.witness = [inner = gf.witness, a, b](const Vector& x, double t) {
      return inner(x, (t - b) / a);
    };
  }
  return out;
}

GraphForm gf_compose(const GraphForm& outer,
                     const std::vector<GraphForm>& inners) {
  check_consistent(outer);
  const int k = static_cast<int>(inners.size());
  if (outer.n != k || k == 0) {
    throw std::invalid_argument(
        "gf_compose: outer input dim must equal the number of inners");
  }
  const int n = inners[0].n;
  int inner_rows = 0;
  int inner_aux = 0;
  for (const GraphForm& gi : inners) {
    check_consistent(gi);
    if (gi.n != n) {
      throw std::invalid_argument("gf_compose: inner input dims differ");
    }
    inner_rows += gi.rows();
    inner_aux += gi.m;
  }

  GraphForm out;
  out.n = n;
  out.m = outer.m + k + inner_aux;
  const int p = outer.rows() + inner_rows;
  out.F = Matrix::Zero(p, n);
  out.G = Matrix::Zero(p, out.m);
  out.d = Vector::Zero(p);
  out.e = Vector::Zero(p);
  out.row_labels.reserve(p);

  // Outer block: its inputs are the epigraph values t_1..t_k, living in the
  // auxiliary columns right after the outer auxiliaries.
  out.G.topLeftCorner(outer.rows(), outer.m) = outer.G;
  out.G.block(0, outer.m, outer.rows(), k) = outer.F;
  out.d.head(outer.rows()) = outer.d;
  out.e.head(outer.rows()) = outer.e;
  out.cones = outer.cones;
  for (const std::string& label : outer.row_labels) {
    out.row_labels.push_back("S:" + label);
  }

  int row = outer.rows();
  int aux = outer.m + k;
  for (int i = 0; i < k; ++i) {
    const GraphForm& gi = inners[i];
    out.F.middleRows(row, gi.rows()) = gi.F;
    out.G.block(row, outer.m + i, gi.rows(), 1) = gi.d;
    if (gi.m > 0) {
      out.G.block(row, aux, gi.rows(), gi.m) = gi.G;
    }
    out.e.segment(row, gi.rows()) = gi.e;
    out.cones.insert(out.cones.end(), gi.cones.begin(), gi.cones.end());
    for (const std::string& label : gi.row_labels) {
      out.row_labels.push_back("g" + std::to_string(i) + ":" + label);
    }
    row += gi.rows();
    aux += gi.m;
  }

  bool have_inner_evals = true;
  bool have_inner_witnesses = true;
  std::vector<std::function<double(const Vector&)>> evals;
  std::vector<std::function<Vector(const Vector&, double)>> witnesses;
  for (const GraphForm& gi : inners) {
    if (!gi.eval) have_inner_evals = false;
    if (!gi.witness) have_inner_witnesses = false;
    evals.push_back(gi.eval);
    witnesses.push_back(gi.witness);
  }
  if (outer.eval && have_inner_evals) {
    out.eval = [outer_eval = outer.eval, evals, k](const Vector& x) {
      Vector u(k);
      for (int i = 0; i < k; ++i) u[i] = evals[i](x);
      return outer_eval(u);
    };
  }
  // A composed witness pins each epigraph value t_i at g_i(x), where the
  // inner witnesses are exact, and certifies the outer block at (g(x), t).
  if (outer.witness && have_inner_evals && have_inner_witnesses) {
    out.witness = [outer_witness = outer.witness, evals, witnesses, k,
                   outer_m = outer.m,
                   total_m = out.m](const Vector& x, double t) {
      Vector z = Vector::Zero(total_m);
      Vector u(k);
      for (int i = 0; i < k; ++i) u[i] = evals[i](x);
      z.head(outer_m) = outer_witness(u, t);
      z.segment(outer_m, k) = u;
      int at = outer_m + k;
      for (int i = 0; i < k; ++i) {
        const Vector zi = witnesses[i](x, u[i]);
        z.segment(at, zi.size()) = zi;
        at += static_cast<int>(zi.size());
      }
      return z;
    };
  }
  return out;
}

GraphForm gf_perspective(const GraphForm& gf) {
  check_consistent(gf);
  GraphForm out = gf;
  out.n = gf.n + 1;
  out.F.resize(gf.rows(), gf.n + 1);
  out.F << gf.F, gf.e;
  out.e = Vector::Zero(gf.rows());
  if (gf.eval) {
    out.eval = [inner = gf.eval, n = gf.n](const Vector& xs) {
      const double s = xs[n];
      if (!(s > 0)) return std::numeric_limits<double>::infinity();
      return s * inner(xs.head(n) / s);
    };
  }
  if (gf.witness) {
    out.witness = [inner = gf.witness, n = gf.n, m = gf.m](const Vector& xs,
                                                           double t) {
      const double s = xs[n];
      if (!(s > 0)) return Vector(Vector::Zero(m));
      return Vector(s * inner(xs.head(n) / s, t / s));
    };
  }
  return out;
}

GraphForm gf_lse(int k) {
  if (k < 1) throw std::invalid_argument("gf_lse: k must be >= 1");
  GraphForm gf;
  gf.n = k;
  gf.m = k;
  const int p = 3 * k + 1;
  gf.F = Matrix::Zero(p, k);
  gf.G = Matrix::Zero(p, k);
  gf.d = Vector::Zero(p);
  gf.e = Vector::Zero(p);

  // sum u_i <= 1.
  gf.G.row(0) = Vector::Ones(k).transpose();
  gf.e[0] = -1.0;
  gf.cones.push_back({ConeKind::nonpositive, 1});
  gf.row_labels.push_back("lse:sum");

  // (x_i - t, 1, u_i) in the exponential cone.
  for (int i = 0; i < k; ++i) {
    const int row = 1 + 3 * i;
    gf.F(row, i) = 1.0;
    gf.d[row] = -1.0;
    gf.e[row + 1] = 1.0;
    gf.G(row + 2, i) = 1.0;
    gf.cones.push_back({ConeKind::exponential, 3});
    const std::string tag = "lse:exp" + std::to_string(i);
    gf.row_labels.push_back(tag + ":a");
    gf.row_labels.push_back(tag + ":b");
    gf.row_labels.push_back(tag + ":c");
  }

  gf.eval = [](const Vector& x) { return log_sum_exp(x); };
  gf.witness = [](const Vector& x, double t) {
    Vector u(x.size());
    for (int i = 0; i < x.size(); ++i) {
      u[i] = std::exp(std::min(x[i] - t, 700.0));
    }
    return u;
  };
  return gf;
}

GraphForm gf_quad(int n) {
  if (n < 1) throw std::invalid_argument("gf_quad: n must be >= 1");
  GraphForm gf;
  gf.n = n;
  gf.m = 0;
  const int p = n + 2;
  gf.F = Matrix::Zero(p, n);
  gf.F.topRows(n) = Matrix::Identity(n, n);
  gf.G = Matrix::Zero(p, 0);
  gf.d = Vector::Zero(p);
  gf.d[n] = 0.5;
  gf.d[n + 1] = 0.5;
  gf.e = Vector::Zero(p);
  gf.e[n] = -0.5;
  gf.e[n + 1] = 0.5;
  gf.cones.push_back({ConeKind::second_order, p});
  for (int i = 0; i < n; ++i) {
    gf.row_labels.push_back("quad:x" + std::to_string(i));
  }
  gf.row_labels.push_back("quad:tm1");
  gf.row_labels.push_back("quad:tp1");

  gf.eval = [](const Vector& x) { return x.squaredNorm(); };
  gf.witness = [](const Vector&, double) { return Vector(Vector::Zero(0)); };
  return gf;
}

GraphForm assemble_evar_graphform(const GmModel& model, double alpha) {
  validate(model);
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("assemble_evar_graphform: alpha must lie in (0, 1)");
  }
  const int n = model.n;
  const int k = model.k;

  if (model.finite_values()) {
    Matrix A(k, n);
    Vector c(k);
    for (int i = 0; i < k; ++i) {
      A.row(i) = -model.means[i].transpose();
      c[i] = std::log(model.weights[i]);
    }
    return gf_perspective(gf_affine_pre(gf_lse(k), A, c));
  }

  std::vector<GraphForm> parts;
  parts.reserve(k);
  for (int i = 0; i < k; ++i) {
    Matrix Sigma = model.covariances[i];
    const double ridge = 1e-9 * Sigma.trace() / n;
    Sigma.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Sigma);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("assemble_evar_graphform: eigensolver failed");
    }
    const Vector evals = eig.eigenvalues();
    if (evals.minCoeff() <= 1e-14 * std::max(1.0, evals.maxCoeff())) {
      throw std::invalid_argument(
          "assemble_evar_graphform: component covariance is singular; the "
          "conic form needs invertible covariances");
    }
    const Matrix root =
        eig.eigenvectors() *
        evals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    const Matrix inv_root =
        eig.eigenvectors() *
        evals.cwiseSqrt().cwiseInverse().asDiagonal() *
        eig.eigenvectors().transpose();
    const Matrix A = root / std::sqrt(2.0);
    const Vector b = -(inv_root * model.means[i]) / std::sqrt(2.0);
    const double offset =
        -0.5 * model.means[i].dot(inv_root * inv_root * model.means[i]) +
        std::log(model.weights[i]);
    parts.push_back(gf_affine_post(gf_affine_pre(gf_quad(n), A, b), 1.0, offset));
  }

  return gf_perspective(gf_compose(gf_lse(k), parts));
}

MembershipResult check_membership(const GraphForm& gf, const Vector& x,
                                  double t) {
  check_consistent(gf);
  if (x.size() != gf.n) {
    throw std::invalid_argument("check_membership: input length mismatch");
  }
  MembershipResult result;
  result.residual = certificate_residual(gf, x, t, nullptr, kMemberResidual);
  result.direct_excess = std::numeric_limits<double>::quiet_NaN();
  if (gf.eval) result.direct_excess = gf.eval(x) - t;

  if (result.residual < kMemberResidual) {
    result.status = Membership::member;
  } else if (std::isfinite(result.direct_excess) &&
             result.direct_excess > kNonMemberExcess) {
    result.status = Membership::non_member;
  } else {
    result.status = Membership::indeterminate;
  }
  return result;
}

double gf_minimize_t(const GraphForm& gf, const Vector& x, double lo,
                     double hi, double tol) {
  check_consistent(gf);
  Vector warm = Vector::Zero(gf.m);
  const auto is_member = [&](double t) {
    return certificate_residual(gf, x, t, &warm, 1e-9) < 1e-9;
  };
  if (!is_member(hi)) {
    throw std::runtime_error("gf_minimize_t: upper bracket is not a member");
  }
  if (is_member(lo)) return lo;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (is_member(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace egm
