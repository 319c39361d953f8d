#include "egm/cone_program.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace egm {

namespace {

void append_triplets(std::ostringstream& out, const Matrix& A) {
  for (int r = 0; r < A.rows(); ++r) {
    for (int c = 0; c < A.cols(); ++c) {
      if (A(r, c) != 0.0) {
        out << r << ' ' << c << ' ' << A(r, c) << '\n';
      }
    }
  }
}

int count_nonzeros(const Matrix& A) {
  int count = 0;
  for (int r = 0; r < A.rows(); ++r) {
    for (int c = 0; c < A.cols(); ++c) {
      if (A(r, c) != 0.0) ++count;
    }
  }
  return count;
}

std::string expect_token(std::istringstream& in, const char* context) {
  std::string token;
  if (!(in >> token)) {
    throw std::runtime_error(std::string("cone program parse: missing ") +
                             context);
  }
  return token;
}

void expect_keyword(std::istringstream& in, const std::string& keyword) {
  const std::string token = expect_token(in, keyword.c_str());
  if (token != keyword) {
    throw std::runtime_error("cone program parse: expected '" + keyword +
                             "', found '" + token + "'");
  }
}

ConeKind cone_kind_from_string(const std::string& name) {
  if (name == "zero") return ConeKind::zero;
  if (name == "nonnegative") return ConeKind::nonnegative;
  if (name == "nonpositive") return ConeKind::nonpositive;
  if (name == "second-order") return ConeKind::second_order;
  if (name == "exponential") return ConeKind::exponential;
  throw std::runtime_error("cone program parse: unknown cone kind '" + name +
                           "'");
}

}  // namespace

int ConeProgram::index_of(const std::string& name) const {
  for (int i = 0; i < num_vars(); ++i) {
    if (var_names[i] == name) return i;
  }
  throw std::invalid_argument("cone program: no variable named '" + name +
                              "'");
}

ConeProgram export_cone_program(const GmModel& model, double alpha,
                                const FeasibleSet& feasible) {
  feasible.check(model.n);
  const GraphForm gf = assemble_evar_graphform(model, alpha);
  const int n = model.n;
  const int k = model.k;
  const int nv = n + 2 + gf.m;

  ConeProgram prog;
  prog.var_names.reserve(nv);
  for (int i = 0; i < n; ++i) prog.var_names.push_back("w" + std::to_string(i));
  prog.var_names.push_back("delta");
  prog.var_names.push_back("t");
  // The first k auxiliaries are the log-sum-exp witnesses u_i; the
  // full-covariance assembly adds the composed epigraph values g_i after.
  for (int i = 0; i < gf.m; ++i) {
    prog.var_names.push_back(i < k ? "u" + std::to_string(i)
                                   : "g" + std::to_string(i - k));
  }

  prog.c = Vector::Zero(nv);
  prog.c[n] = -std::log(alpha);
  prog.c[n + 1] = 1.0;

  prog.A_eq = Matrix::Zero(1, nv);
  prog.A_eq.row(0).head(n) = Vector::Ones(n).transpose();
  prog.b_eq = Vector::Constant(1, 1.0);
  prog.eq_labels = {"budget"};

  // Graph form rows: F~ (w, delta) + d t + G z + e in C, rewritten as
  // b_cone - A_cone v in C with b_cone = -e (e is zero after the
  // perspective) and A_cone = -[F~ | d | G].
  int bound_rows = 0;
  const Vector lo = feasible.effective_lower(n);
  const Vector hi = feasible.effective_upper(n);
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(lo[i])) ++bound_rows;
    if (std::isfinite(hi[i])) ++bound_rows;
  }
  const int p = gf.rows();
  prog.A_cone = Matrix::Zero(p + bound_rows, nv);
  prog.b_cone = Vector::Zero(p + bound_rows);
  prog.A_cone.topLeftCorner(p, n + 1) = -gf.F;
  prog.A_cone.col(n + 1).head(p) = -gf.d;
  prog.A_cone.topRightCorner(p, gf.m) = -gf.G;
  prog.b_cone.head(p) = gf.e;
  prog.cones = gf.cones;
  prog.cone_labels = gf.row_labels;

  int row = p;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(lo[i])) {
      prog.A_cone(row, i) = -1.0;
      prog.b_cone[row] = -lo[i];
      prog.cone_labels.push_back("bound:lo:w" + std::to_string(i));
      ++row;
    }
    if (std::isfinite(hi[i])) {
      prog.A_cone(row, i) = 1.0;
      prog.b_cone[row] = hi[i];
      prog.cone_labels.push_back("bound:hi:w" + std::to_string(i));
      ++row;
    }
  }
  if (bound_rows > 0) {
    prog.cones.push_back({ConeKind::nonnegative, bound_rows});
  }
  return prog;
}

std::string cone_program_to_text(const ConeProgram& prog) {
  std::ostringstream out;
  out.precision(17);
  out << "CONEPROGRAM version 1\n";
  out << "VARS " << prog.num_vars() << '\n';
  for (const std::string& name : prog.var_names) out << name << '\n';

  int obj_nnz = 0;
  for (int i = 0; i < prog.c.size(); ++i) {
    if (prog.c[i] != 0.0) ++obj_nnz;
  }
  out << "OBJ " << obj_nnz << '\n';
  for (int i = 0; i < prog.c.size(); ++i) {
    if (prog.c[i] != 0.0) out << i << ' ' << prog.c[i] << '\n';
  }

  out << "EQ " << prog.A_eq.rows() << ' ' << count_nonzeros(prog.A_eq) << '\n';
  for (int r = 0; r < prog.A_eq.rows(); ++r) {
    out << prog.b_eq[r] << ' ' << prog.eq_labels[r] << '\n';
  }
  append_triplets(out, prog.A_eq);

  out << "CONES " << prog.cones.size() << '\n';
  for (const Cone& cone : prog.cones) {
    out << to_string(cone.kind) << ' ' << cone.dim << '\n';
  }
  out << "CONE_ROWS " << prog.A_cone.rows() << '\n';
  for (int r = 0; r < prog.A_cone.rows(); ++r) {
    out << prog.b_cone[r] << ' ' << prog.cone_labels[r] << '\n';
  }
  out << "CONE_A " << count_nonzeros(prog.A_cone) << '\n';
  append_triplets(out, prog.A_cone);
  out << "END\n";
  return out.str();
}

ConeProgram cone_program_from_text(const std::string& text) {
  std::istringstream in(text);
  ConeProgram prog;

  expect_keyword(in, "CONEPROGRAM");
  expect_keyword(in, "version");
  if (expect_token(in, "version number") != "1") {
    throw std::runtime_error("cone program parse: unsupported version");
  }

  expect_keyword(in, "VARS");
  int nv = 0;
  in >> nv;
  for (int i = 0; i < nv; ++i) {
    prog.var_names.push_back(expect_token(in, "variable name"));
  }

  expect_keyword(in, "OBJ");
  int obj_nnz = 0;
  in >> obj_nnz;
  prog.c = Vector::Zero(nv);
  for (int j = 0; j < obj_nnz; ++j) {
    int i = 0;
    double value = 0;
    if (!(in >> i >> value)) {
      throw std::runtime_error("cone program parse: bad objective entry");
    }
    prog.c[i] = value;
  }

  expect_keyword(in, "EQ");
  int eq_rows = 0, eq_nnz = 0;
  if (!(in >> eq_rows >> eq_nnz)) {
    throw std::runtime_error("cone program parse: bad EQ header");
  }
  prog.A_eq = Matrix::Zero(eq_rows, nv);
  prog.b_eq = Vector::Zero(eq_rows);
  for (int r = 0; r < eq_rows; ++r) {
    if (!(in >> prog.b_eq[r])) {
      throw std::runtime_error("cone program parse: bad EQ rhs");
    }
    prog.eq_labels.push_back(expect_token(in, "equality label"));
  }
  for (int j = 0; j < eq_nnz; ++j) {
    int r = 0, c = 0;
    double value = 0;
    if (!(in >> r >> c >> value)) {
      throw std::runtime_error("cone program parse: bad EQ entry");
    }
    prog.A_eq(r, c) = value;
  }

  expect_keyword(in, "CONES");
  int blocks = 0;
  in >> blocks;
  for (int j = 0; j < blocks; ++j) {
    Cone cone;
    cone.kind = cone_kind_from_string(expect_token(in, "cone kind"));
    if (!(in >> cone.dim) || cone.dim <= 0) {
      throw std::runtime_error("cone program parse: bad cone dim");
    }
    prog.cones.push_back(cone);
  }

  expect_keyword(in, "CONE_ROWS");
  int cone_rows = 0;
  in >> cone_rows;
  prog.A_cone = Matrix::Zero(cone_rows, nv);
  prog.b_cone = Vector::Zero(cone_rows);
  for (int r = 0; r < cone_rows; ++r) {
    if (!(in >> prog.b_cone[r])) {
      throw std::runtime_error("cone program parse: bad cone rhs");
    }
    prog.cone_labels.push_back(expect_token(in, "cone row label"));
  }

  expect_keyword(in, "CONE_A");
  int cone_nnz = 0;
  in >> cone_nnz;
  for (int j = 0; j < cone_nnz; ++j) {
    int r = 0, c = 0;
    double value = 0;
    if (!(in >> r >> c >> value)) {
      throw std::runtime_error("cone program parse: bad cone entry");
    }
    prog.A_cone(r, c) = value;
  }
  expect_keyword(in, "END");

  int cone_dim_sum = 0;
  for (const Cone& cone : prog.cones) cone_dim_sum += cone.dim;
  if (cone_dim_sum != cone_rows) {
    throw std::runtime_error(
        "cone program parse: cone dims do not match row count");
  }
  return prog;
}

}  // namespace egm
