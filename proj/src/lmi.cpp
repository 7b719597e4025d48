#include "admmcert/lmi.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace admmcert {

VectorXd eigvals_sym(const MatrixXd& M, double asym_tol) {
  if (M.rows() != M.cols()) throw std::invalid_argument("eigvals_sym: matrix is not square");
  if (M.size() == 0) return VectorXd();
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > asym_tol * scale)
    throw std::invalid_argument("eigvals_sym: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues();  // already ascending
}

namespace lmi {

AffineExpr::AffineExpr(int rows, int cols)
    : rows_(rows), cols_(cols), constant_(MatrixXd::Zero(rows, cols)) {}

AffineExpr AffineExpr::constant(const MatrixXd& c) {
  AffineExpr e(static_cast<int>(c.rows()), static_cast<int>(c.cols()));
  e.constant_ = c;
  return e;
}

AffineExpr& AffineExpr::add(VarId v, const MatrixXd& left, const MatrixXd& right, bool transposed) {
  if (left.rows() != rows_ || right.cols() != cols_)
    throw std::invalid_argument("AffineExpr::add: outer dimensions do not match expression");
  terms_.push_back({v.index, left, right, transposed});
  return *this;
}

AffineExpr& AffineExpr::add_constant(const MatrixXd& c) {
  if (c.rows() != rows_ || c.cols() != cols_)
    throw std::invalid_argument("AffineExpr::add_constant: dimension mismatch");
  constant_ += c;
  return *this;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  if (rows_ == 0 && cols_ == 0 && terms_.empty()) {
    *this = o;
    return *this;
  }
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("AffineExpr: dimension mismatch in +");
  constant_ += o.constant_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

AffineExpr AffineExpr::scaled(double s) const {
  AffineExpr e = *this;
  e.constant_ *= s;
  for (auto& t : e.terms_) t.left *= s;
  return e;
}

AffineExpr AffineExpr::operator-() const { return scaled(-1.0); }

AffineExpr AffineExpr::transpose() const {
  AffineExpr e(cols_, rows_);
  e.constant_ = constant_.transpose();
  for (const auto& t : terms_)
    e.terms_.push_back({t.var, t.right.transpose(), t.left.transpose(), !t.transposed});
  return e;
}

MatrixXd AffineExpr::evaluate(const Assignment& a) const {
  MatrixXd out = constant_;
  for (const auto& t : terms_) {
    const MatrixXd& X = a.at(t.var);
    if (t.transposed)
      out.noalias() += t.left * X.transpose() * t.right;
    else
      out.noalias() += t.left * X * t.right;
  }
  return out;
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a += -b; }

AffineExpr operator*(const MatrixXd& left, const AffineExpr& e) {
  AffineExpr out = AffineExpr::constant(left * e.constant_part());
  for (const auto& t : e.terms()) out.add(VarId{t.var}, left * t.left, t.right, t.transposed);
  return out;
}

AffineExpr operator*(const AffineExpr& e, const MatrixXd& right) {
  AffineExpr out = AffineExpr::constant(e.constant_part() * right);
  for (const auto& t : e.terms()) out.add(VarId{t.var}, t.left, t.right * right, t.transposed);
  return out;
}

int Constraint::dim() const {
  int d = 0;
  for (int s : block_sizes) d += s;
  return d;
}

void Constraint::set(int r, int c, AffineExpr e) {
  if (r > c) {
    std::swap(r, c);
    e = e.transpose();
  }
  upper[{r, c}] = std::move(e);
}

VarId LmiProblem::add_variable(const std::string& name, int rows, int cols, VarKind kind) {
  if (find(name)) throw std::invalid_argument("duplicate variable " + name);
  if (kind != VarKind::Full && rows != cols)
    throw std::invalid_argument("structured variable " + name + " must be square");
  vars_.push_back({name, rows, cols, kind});
  return VarId{static_cast<int>(vars_.size()) - 1};
}

void LmiProblem::add_constraint(Constraint c) { constraints_.push_back(std::move(c)); }

void LmiProblem::add_equality(const std::string& label, AffineExpr e) {
  equalities_.push_back({label, std::move(e)});
}

AffineExpr LmiProblem::var(VarId v) const {
  const auto& x = vars_.at(v.index);
  AffineExpr e(x.rows, x.cols);
  e.add(v, MatrixXd::Identity(x.rows, x.rows), MatrixXd::Identity(x.cols, x.cols));
  return e;
}

std::optional<VarId> LmiProblem::find(const std::string& name) const {
  for (size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].name == name) return VarId{static_cast<int>(i)};
  return std::nullopt;
}

namespace {

std::vector<int> block_offsets(const Constraint& c) {
  std::vector<int> off(c.block_sizes.size() + 1, 0);
  for (size_t i = 0; i < c.block_sizes.size(); ++i) off[i + 1] = off[i] + c.block_sizes[i];
  return off;
}

// Writes block (r,c) and its mirror; diagonal blocks are symmetrized.
void place(MatrixXd& M, const std::vector<int>& off, const std::vector<int>& sz, int r, int c,
           const MatrixXd& B) {
  if (r == c) {
    M.block(off[r], off[c], sz[r], sz[c]) += 0.5 * (B + B.transpose());
  } else {
    M.block(off[r], off[c], sz[r], sz[c]) += B;
    M.block(off[c], off[r], sz[c], sz[r]) += B.transpose();
  }
}

}  // namespace

MatrixXd LmiProblem::evaluate(const Constraint& c, const Assignment& a) const {
  auto off = block_offsets(c);
  MatrixXd M = MatrixXd::Zero(c.dim(), c.dim());
  for (const auto& [rc, e] : c.upper) place(M, off, c.block_sizes, rc.first, rc.second, e.evaluate(a));
  return M;
}

bool LmiProblem::homogeneous() const {
  for (const auto& c : constraints_)
    for (const auto& [rc, e] : c.upper)
      if (e.constant_part().cwiseAbs().maxCoeff() != 0.0) return false;
  for (const auto& q : equalities_)
    if (q.expr.constant_part().size() && q.expr.constant_part().cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

void LmiProblem::validate() const {
  auto check_terms = [&](const AffineExpr& e, const std::string& where) {
    for (const auto& t : e.terms()) {
      if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
        throw std::invalid_argument(where + ": unknown variable");
      const auto& v = vars_[t.var];
      int xr = t.transposed ? v.cols : v.rows;
      int xc = t.transposed ? v.rows : v.cols;
      if (t.left.cols() != xr || t.right.rows() != xc)
        throw std::invalid_argument(where + ": inner dimensions do not match variable " + v.name);
    }
  };
  for (const auto& c : constraints_) {
    int nb = static_cast<int>(c.block_sizes.size());
    for (const auto& [rc, e] : c.upper) {
      if (rc.first < 0 || rc.second >= nb) throw std::invalid_argument(c.label + ": block index out of range");
      if (e.rows() != c.block_sizes[rc.first] || e.cols() != c.block_sizes[rc.second])
        throw std::invalid_argument(c.label + ": block size mismatch");
      check_terms(e, c.label);
    }
    // symmetry of diagonal blocks, probed with a deterministic assignment
    Assignment probe;
    for (size_t i = 0; i < vars_.size(); ++i) {
      const auto& v = vars_[i];
      MatrixXd X(v.rows, v.cols);
      for (int r = 0; r < v.rows; ++r)
        for (int k = 0; k < v.cols; ++k) X(r, k) = std::sin(1.0 + 3.1 * r + 1.7 * k + 0.37 * i);
      if (v.kind == VarKind::Symmetric || v.kind == VarKind::PositiveDefinite) X = 0.5 * (X + X.transpose()).eval();
      if (v.kind == VarKind::Diagonal || v.kind == VarKind::DiagonalNonneg) X = MatrixXd(X.diagonal().asDiagonal());
      probe.push_back(X);
    }
    for (const auto& [rc, e] : c.upper) {
      if (rc.first != rc.second) continue;
      MatrixXd B = e.evaluate(probe);
      double s = std::max(1.0, B.cwiseAbs().maxCoeff());
      if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-9 * s)
        throw std::invalid_argument(c.label + ": diagonal block is not symmetric");
    }
  }
  for (const auto& q : equalities_) check_terms(q.expr, q.label);
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

namespace {

// Free-entry parameterization of one variable.
struct Param {
  int var;
  int r;
  int c;
  bool sym;  // mirrored entry
};

struct Layout {
  std::vector<Param> params;
  std::vector<int> first;  // first param index per variable
  std::vector<int> count;
};

Layout make_layout(const std::vector<Variable>& vars) {
  Layout L;
  for (size_t i = 0; i < vars.size(); ++i) {
    const auto& v = vars[i];
    L.first.push_back(static_cast<int>(L.params.size()));
    int vi = static_cast<int>(i);
    switch (v.kind) {
      case VarKind::Symmetric:
      case VarKind::PositiveDefinite:
        for (int c = 0; c < v.cols; ++c)
          for (int r = 0; r <= c; ++r) L.params.push_back({vi, r, c, r != c});
        break;
      case VarKind::Diagonal:
      case VarKind::DiagonalNonneg:
        for (int r = 0; r < v.rows; ++r) L.params.push_back({vi, r, r, false});
        break;
      case VarKind::Full:
        for (int c = 0; c < v.cols; ++c)
          for (int r = 0; r < v.rows; ++r) L.params.push_back({vi, r, c, false});
        break;
    }
    L.count.push_back(static_cast<int>(L.params.size()) - L.first.back());
  }
  return L;
}

Assignment unpack(const std::vector<Variable>& vars, const Layout& L, const VectorXd& z) {
  Assignment a;
  for (const auto& v : vars) a.push_back(MatrixXd::Zero(v.rows, v.cols));
  for (size_t p = 0; p < L.params.size(); ++p) {
    const auto& q = L.params[p];
    a[q.var](q.r, q.c) = z(p);
    if (q.sym) a[q.var](q.c, q.r) = z(p);
  }
  return a;
}

// Coefficient of parameter p in term t: left * E * right with E the basis matrix.
MatrixXd term_coeff(const Term& t, const Param& q) {
  // X = e_r e_c^T (+ e_c e_r^T); X^T swaps.
  auto outer = [&](int r, int c) -> MatrixXd {
    int rr = t.transposed ? c : r;
    int cc = t.transposed ? r : c;
    return t.left.col(rr) * t.right.row(cc);
  };
  MatrixXd M = outer(q.r, q.c);
  if (q.sym) M += outer(q.c, q.r);
  return M;
}

struct SparseCoeffs {
  MatrixXd constant;
  std::map<int, MatrixXd> by_param;
};

SparseCoeffs expand_constraint(const LmiProblem& p, const Layout& L, const Constraint& c) {
  auto off = block_offsets(c);
  int d = c.dim();
  SparseCoeffs out;
  out.constant = MatrixXd::Zero(d, d);
  for (const auto& [rc, e] : c.upper) {
    place(out.constant, off, c.block_sizes, rc.first, rc.second, e.constant_part());
    for (const auto& t : e.terms()) {
      for (int k = 0; k < L.count[t.var]; ++k) {
        int pi = L.first[t.var] + k;
        auto it = out.by_param.find(pi);
        if (it == out.by_param.end()) it = out.by_param.emplace(pi, MatrixXd::Zero(d, d)).first;
        place(it->second, off, c.block_sizes, rc.first, rc.second, term_coeff(t, L.params[pi]));
      }
    }
  }
  (void)p;
  return out;
}

struct MatBlock {
  MatrixXd c0;
  std::vector<int> idx;
  std::vector<MatrixXd> coef;
  double tcoef = 0.0;
};

struct ScalarBlock {
  double c0 = 0.0;
  std::vector<int> idx;
  std::vector<double> coef;
};

struct Reparam {
  bool identity = true;
  VectorXd z0;
  MatrixXd Z;  // nz x ny
  int ny = 0;

  VectorXd to_z(const VectorXd& y) const { return identity ? y : VectorXd(z0 + Z * y); }
};

// Map sparse param coefficients into y coordinates.
void to_y(const Reparam& R, const SparseCoeffs& sc, double sign, MatrixXd& c0, std::vector<int>& idx,
          std::vector<MatrixXd>& coef) {
  c0 = sign * sc.constant;
  if (R.identity) {
    for (const auto& [p, M] : sc.by_param) {
      idx.push_back(p);
      coef.push_back(sign * M);
    }
    return;
  }
  for (const auto& [p, M] : sc.by_param) c0 += sign * R.z0(p) * M;
  for (int q = 0; q < R.ny; ++q) {
    MatrixXd acc;
    bool any = false;
    for (const auto& [p, M] : sc.by_param) {
      double w = R.Z(p, q);
      if (w == 0.0) continue;
      if (!any) {
        acc = sign * w * M;
        any = true;
      } else {
        acc += sign * w * M;
      }
    }
    if (any && acc.cwiseAbs().maxCoeff() > 0.0) {
      idx.push_back(q);
      coef.push_back(std::move(acc));
    }
  }
}

void scalar_from_param(const Reparam& R, int p, double sign, double offset, ScalarBlock& b) {
  // value = offset + sign * z_p
  if (R.identity) {
    b.c0 = offset;
    b.idx = {p};
    b.coef = {sign};
    return;
  }
  b.c0 = offset + sign * R.z0(p);
  for (int q = 0; q < R.ny; ++q)
    if (R.Z(p, q) != 0.0) {
      b.idx.push_back(q);
      b.coef.push_back(sign * R.Z(p, q));
    }
}

class Barrier {
 public:
  std::vector<MatBlock> mats;
  std::vector<ScalarBlock> scalars;
  int ny = 0;
  double nu = 0.0;  // barrier parameter

  MatrixXd S(const MatBlock& b, const VectorXd& w) const {
    MatrixXd s = b.c0;
    for (size_t k = 0; k < b.idx.size(); ++k) s += w(b.idx[k]) * b.coef[k];
    if (b.tcoef != 0.0) s.diagonal().array() += b.tcoef * w(ny);
    return s;
  }
  double s(const ScalarBlock& b, const VectorXd& w) const {
    double v = b.c0;
    for (size_t k = 0; k < b.idx.size(); ++k) v += w(b.idx[k]) * b.coef[k];
    return v;
  }

  // -sum log det; +inf outside the domain
  double value(const VectorXd& w) const {
    double f = 0.0;
    for (const auto& b : mats) {
      Eigen::LLT<MatrixXd> llt(S(b, w));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const MatrixXd& Lm = llt.matrixLLT();
      for (int i = 0; i < Lm.rows(); ++i) {
        double d = Lm(i, i);
        if (!(d > 0.0)) return std::numeric_limits<double>::infinity();
        f -= 2.0 * std::log(d);
      }
    }
    for (const auto& b : scalars) {
      double v = s(b, w);
      if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
      f -= std::log(v);
    }
    return f;
  }

  void derivatives(const VectorXd& w, VectorXd& g, MatrixXd& H) const {
    int n = ny + 1;
    g = VectorXd::Zero(n);
    H = MatrixXd::Zero(n, n);
    for (const auto& b : mats) {
      MatrixXd Sm = S(b, w);
      int d = static_cast<int>(Sm.rows());
      Eigen::LLT<MatrixXd> llt(Sm);
      MatrixXd Linv = llt.matrixL().solve(MatrixXd::Identity(d, d));
      int k = static_cast<int>(b.idx.size()) + (b.tcoef != 0.0 ? 1 : 0);
      MatrixXd W(d * d, k);
      std::vector<int> gi;
      for (size_t j = 0; j < b.idx.size(); ++j) {
        MatrixXd Wj = Linv * b.coef[j] * Linv.transpose();
        W.col(j) = Eigen::Map<VectorXd>(Wj.data(), d * d);
        gi.push_back(b.idx[j]);
      }
      if (b.tcoef != 0.0) {
        MatrixXd Wt = b.tcoef * (Linv * Linv.transpose());
        W.col(k - 1) = Eigen::Map<VectorXd>(Wt.data(), d * d);
        gi.push_back(ny);
      }
      MatrixXd Hl = W.transpose() * W;
      for (int a = 0; a < k; ++a) {
        double tr = 0.0;
        for (int i = 0; i < d; ++i) tr += W(i * d + i, a);
        g(gi[a]) -= tr;
        for (int c = 0; c < k; ++c) H(gi[a], gi[c]) += Hl(a, c);
      }
    }
    for (const auto& b : scalars) {
      double v = s(b, w);
      for (size_t a = 0; a < b.idx.size(); ++a) {
        double ca = b.coef[a] / v;
        g(b.idx[a]) -= ca;
        for (size_t c = 0; c < b.idx.size(); ++c) H(b.idx[a], b.idx[c]) += ca * b.coef[c] / v;
      }
    }
  }
};

double max_eig(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(M.rows() - 1);
}

}  // namespace

VerificationReport verify_assignment(const LmiProblem& p, const Assignment& a, double eps) {
  VerificationReport rep;
  rep.ok = true;
  rep.margin = std::numeric_limits<double>::infinity();
  const auto& vars = p.variables();
  if (a.size() != vars.size()) {
    rep.ok = false;
    rep.failures.push_back("assignment does not cover all variables");
    return rep;
  }
  for (size_t i = 0; i < vars.size(); ++i) {
    const auto& v = vars[i];
    const MatrixXd& X = a[i];
    if (X.rows() != v.rows || X.cols() != v.cols) {
      rep.ok = false;
      rep.failures.push_back(v.name + ": wrong shape");
      continue;
    }
    if (!X.allFinite()) {
      rep.ok = false;
      rep.failures.push_back(v.name + ": non-finite entries");
      continue;
    }
    double s = std::max(1.0, X.cwiseAbs().maxCoeff());
    bool square_sym = v.kind == VarKind::Symmetric || v.kind == VarKind::PositiveDefinite;
    if (square_sym && (X - X.transpose()).cwiseAbs().maxCoeff() > 1e-12 * s) {
      rep.ok = false;
      rep.failures.push_back(v.name + ": not symmetric");
    }
    if (v.kind == VarKind::Diagonal || v.kind == VarKind::DiagonalNonneg) {
      MatrixXd off = X;
      off.diagonal().setZero();
      if (off.cwiseAbs().maxCoeff() > 0.0) {
        rep.ok = false;
        rep.failures.push_back(v.name + ": not diagonal");
      }
    }
    if (v.kind == VarKind::DiagonalNonneg && X.diagonal().minCoeff() < 0.0) {
      rep.ok = false;
      rep.failures.push_back(v.name + ": negative diagonal entry");
    }
    if (v.kind == VarKind::PositiveDefinite) {
      VectorXd ev = eigvals_sym(0.5 * (X + X.transpose()));
      double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
      if (ev(0) < eps * std::max(1.0, norm)) {
        rep.ok = false;
        rep.failures.push_back(v.name + ": not positive definite with margin (min eig " + std::to_string(ev(0)) + ")");
      }
    }
  }
  for (const auto& c : p.constraints()) {
    MatrixXd M = p.evaluate(c, a);
    ConstraintReport cr;
    cr.label = c.label;
    if (!M.allFinite()) {
      cr.max_eig = std::numeric_limits<double>::infinity();
      cr.ok = false;
    } else {
      VectorXd ev = eigvals_sym(M, 1e-8);
      double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
      cr.max_eig = ev(ev.size() - 1);
      cr.required = eps * std::max(1.0, norm);
      cr.ok = cr.max_eig <= -cr.required;
    }
    rep.margin = std::min(rep.margin, -cr.max_eig);
    if (!cr.ok) {
      rep.ok = false;
      rep.failures.push_back(c.label + ": max eigenvalue " + std::to_string(cr.max_eig));
    }
    rep.constraints.push_back(cr);
  }
  for (const auto& q : p.equalities()) {
    MatrixXd R = q.expr.evaluate(a);
    double scale = 1.0;
    for (const auto& t : q.expr.terms())
      scale = std::max(scale, t.left.norm() * a[t.var].norm() * t.right.norm());
    if (R.size() && R.cwiseAbs().maxCoeff() > 1e-8 * scale) {
      rep.ok = false;
      rep.failures.push_back(q.label + ": equality residual " + std::to_string(R.cwiseAbs().maxCoeff()));
    }
  }
  if (p.constraints().empty()) rep.margin = 0.0;
  return rep;
}

FeasibilityResult solve_feasibility(const LmiProblem& p, const SolverOptions& opts) {
  FeasibilityResult res;
  if (!(opts.eps > 0.0)) throw std::invalid_argument("solve_feasibility: eps must be positive");
  p.validate();
  const auto& vars = p.variables();
  for (const auto& c : p.constraints())
    if (c.dim() > opts.max_block_dim) {
      res.status = Status::NumericalFailure;
      res.message = c.label + ": block dimension exceeds the configured cap";
      return res;
    }

  Layout L = make_layout(vars);
  int nz = static_cast<int>(L.params.size());
  const double floor = p.homogeneous() ? 1.0 : opts.eps;
  const double R = opts.bound;

  // equalities -> z = z0 + Z y
  Reparam rp;
  rp.ny = nz;
  if (!p.equalities().empty()) {
    std::vector<VectorXd> rows;
    std::vector<double> rhs;
    for (const auto& q : p.equalities()) {
      int er = q.expr.rows(), ec = q.expr.cols();
      std::vector<VectorXd> local(er * ec, VectorXd::Zero(nz));
      for (const auto& t : q.expr.terms())
        for (int k = 0; k < L.count[t.var]; ++k) {
          int pi = L.first[t.var] + k;
          MatrixXd M = term_coeff(t, L.params[pi]);
          for (int c = 0; c < ec; ++c)
            for (int r = 0; r < er; ++r) local[c * er + r](pi) += M(r, c);
        }
      for (int c = 0; c < ec; ++c)
        for (int r = 0; r < er; ++r) {
          rows.push_back(local[c * er + r]);
          rhs.push_back(-q.expr.constant_part()(r, c));
        }
    }
    MatrixXd A(rows.size(), nz);
    VectorXd b(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      A.row(i) = rows[i].transpose();
      b(i) = rhs[i];
    }
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    double thr = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > thr) ++rank;
    VectorXd utb = svd.matrixU().leftCols(rank).transpose() * b;
    for (int i = 0; i < rank; ++i) utb(i) /= sv(i);
    rp.z0 = svd.matrixV().leftCols(rank) * utb;
    if ((A * rp.z0 - b).norm() > 1e-9 * (1.0 + b.norm())) {
      res.status = Status::Infeasible;
      res.best_slack = std::numeric_limits<double>::infinity();
      res.message = "equality constraints are inconsistent";
      return res;
    }
    rp.identity = false;
    rp.Z = svd.matrixV().rightCols(nz - rank);
    rp.ny = nz - rank;
  }

  Barrier bar;
  bar.ny = rp.ny;
  std::vector<SparseCoeffs> expanded;
  for (const auto& c : p.constraints()) {
    expanded.push_back(expand_constraint(p, L, c));
    MatBlock b;
    to_y(rp, expanded.back(), -1.0, b.c0, b.idx, b.coef);  // S = tI - F
    b.tcoef = 1.0;
    bar.nu += c.dim();
    bar.mats.push_back(std::move(b));
  }
  for (size_t vi = 0; vi < vars.size(); ++vi) {
    const auto& v = vars[vi];
    if (v.kind == VarKind::PositiveDefinite) {
      SparseCoeffs sc;
      sc.constant = MatrixXd::Zero(v.rows, v.rows);
      for (int k = 0; k < L.count[vi]; ++k) {
        const auto& q = L.params[L.first[vi] + k];
        MatrixXd E = MatrixXd::Zero(v.rows, v.rows);
        E(q.r, q.c) = 1.0;
        if (q.sym) E(q.c, q.r) = 1.0;
        sc.by_param[L.first[vi] + k] = E;
      }
      MatBlock lo, hi;
      to_y(rp, sc, 1.0, lo.c0, lo.idx, lo.coef);
      lo.c0.diagonal().array() -= floor;
      to_y(rp, sc, -1.0, hi.c0, hi.idx, hi.coef);
      hi.c0.diagonal().array() += R;
      bar.nu += 2 * v.rows;
      bar.mats.push_back(std::move(lo));
      bar.mats.push_back(std::move(hi));
    } else {
      for (int k = 0; k < L.count[vi]; ++k) {
        int pi = L.first[vi] + k;
        ScalarBlock up, dn;
        scalar_from_param(rp, pi, -1.0, R, up);
        if (v.kind == VarKind::DiagonalNonneg)
          scalar_from_param(rp, pi, 1.0, 0.0, dn);
        else
          scalar_from_param(rp, pi, 1.0, R, dn);
        bar.nu += 2;
        if (!up.idx.empty()) bar.scalars.push_back(std::move(up));
        if (!dn.idx.empty()) bar.scalars.push_back(std::move(dn));
      }
    }
  }

  // interior start
  VectorXd zinit = VectorXd::Zero(nz);
  for (size_t vi = 0; vi < vars.size(); ++vi) {
    const auto& v = vars[vi];
    for (int k = 0; k < L.count[vi]; ++k) {
      const auto& q = L.params[L.first[vi] + k];
      if (v.kind == VarKind::PositiveDefinite && q.r == q.c) zinit(L.first[vi] + k) = floor + 1.0;
      if (v.kind == VarKind::DiagonalNonneg) zinit(L.first[vi] + k) = 1.0;
    }
  }
  int n = rp.ny + 1;
  VectorXd w = VectorXd::Zero(n);
  w.head(rp.ny) = rp.identity ? zinit : VectorXd(rp.Z.transpose() * (zinit - rp.z0));

  auto slack_of = [&](const VectorXd& y) {
    double t = -std::numeric_limits<double>::infinity();
    VectorXd z = rp.to_z(y);
    Assignment a = unpack(vars, L, z);
    for (const auto& c : p.constraints()) t = std::max(t, max_eig(p.evaluate(c, a)));
    return t;
  };
  double tmax = p.constraints().empty() ? 0.0 : slack_of(w.head(rp.ny));
  w(rp.ny) = tmax + 1.0;
  if (!std::isfinite(bar.value(w))) {
    res.status = Status::NumericalFailure;
    res.message = "no interior starting point";
    return res;
  }

  auto finish_feasible = [&](const VectorXd& y, int it) -> bool {
    Assignment a = unpack(vars, L, rp.to_z(y));
    VerificationReport rep = verify_assignment(p, a, opts.eps);
    if (!rep.ok) return false;
    res.status = Status::Feasible;
    res.assignment = std::move(a);
    res.margin = rep.margin;
    res.best_slack = -rep.margin;
    res.iterations = it;
    res.report = std::move(rep);
    return true;
  };

  if (p.constraints().empty()) {
    if (finish_feasible(w.head(rp.ny), 0)) return res;
    res.status = Status::NumericalFailure;
    res.message = "start point failed verification";
    return res;
  }

  int newton = 0;
  double best_t = w(rp.ny);
  VectorXd g;
  MatrixXd H;
  // Jacobi-scaled Newton direction
  auto newton_dir = [&](const VectorXd& grad, const MatrixXd& Hm) -> VectorXd {
    VectorXd d = Hm.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    MatrixXd Hs = d.asDiagonal() * Hm * d.asDiagonal();
    VectorXd rhs = -(d.asDiagonal() * grad);
    Eigen::LLT<MatrixXd> llt(Hs);
    VectorXd x;
    if (llt.info() == Eigen::Success) x = llt.solve(rhs);
    if (llt.info() != Eigen::Success || !x.allFinite()) {
      Hs.diagonal().array() += 1e-10;
      x = Hs.ldlt().solve(rhs);
    }
    return d.asDiagonal() * x;
  };
  // start the path near the initial point
  bar.derivatives(w, g, H);
  double mu = 1.0;
  {
    VectorXd et = VectorXd::Zero(n);
    et(rp.ny) = 1.0;
    VectorXd a = newton_dir(et, H), b = newton_dir(g, H);  // -H^{-1}e_t, -H^{-1}g
    double num = et.dot(b), den = et.dot(a);
    if (den < 0.0 && std::isfinite(num / den) && -num / den > 0.0) mu = std::clamp(-num / den, 1e-6, 1e6);
    if (!(mu > 0.0)) mu = 1.0;
  }
  bool centered = false;
  while (newton < opts.max_newton) {
    centered = false;
    for (int inner = 0; inner < 100 && newton < opts.max_newton; ++inner, ++newton) {
      bar.derivatives(w, g, H);
      g(rp.ny) += mu;
      VectorXd dx = newton_dir(g, H);
      double dec = -g.dot(dx);
      if (!std::isfinite(dec)) {
        res.status = Status::NumericalFailure;
        res.message = "Newton system breakdown";
        res.best_slack = best_t;
        res.iterations = newton;
        return res;
      }
      if (dec < 1e-9) {
        centered = true;
        break;
      }
      double f0 = mu * w(rp.ny) + bar.value(w);
      double step = 1.0;
      VectorXd wn;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        wn = w + step * dx;
        double f1 = mu * wn(rp.ny) + bar.value(wn);
        if (std::isfinite(f1) && f1 <= f0 - 0.25 * step * dec) {
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      w = wn;
      best_t = std::min(best_t, w(rp.ny));
      if (w(rp.ny) < -opts.stop_margin && finish_feasible(w.head(rp.ny), newton + 1)) return res;
      if (dec < 1e-3) {
        centered = true;
        if (dec < 1e-7) break;
      }
    }
    double t = w(rp.ny);
    double gap = bar.nu / mu;
    // scale used for the relative strictness test
    Assignment a = unpack(vars, L, rp.to_z(w.head(rp.ny)));
    double scale = 1.0;
    for (const auto& c : p.constraints()) {
      VectorXd ev = eigvals_sym(p.evaluate(c, a), 1e-8);
      scale = std::max({scale, std::abs(ev(0)), std::abs(ev(ev.size() - 1))});
    }
    double need = opts.eps * scale;
    if (t < -need && finish_feasible(w.head(rp.ny), newton)) return res;
    if (centered && (t - 1.1 * gap > -need || gap < 1e-10 * std::max(1.0, std::abs(t)))) {
      res.status = Status::Infeasible;
      res.best_slack = t;
      res.iterations = newton;
      res.assignment = std::move(a);
      res.message = "slack lower bound above -eps";
      return res;
    }
    if (gap < 1e-13 * std::max(1.0, std::abs(t))) break;
    mu *= 8.0;
  }
  res.status = Status::NumericalFailure;
  res.best_slack = best_t;
  res.iterations = newton;
  res.message = "iteration limit reached without a verdict";
  return res;
}

std::string dump_sdpa(const LmiProblem& p) {
  Layout L = make_layout(p.variables());
  int nz = static_cast<int>(L.params.size());
  std::ostringstream os;
  os.precision(17);
  os << "* feasibility problem: sum_i z_i F_i - F_0 >= 0\n";
  os << nz << "\n" << p.constraints().size() << "\n";
  for (const auto& c : p.constraints()) os << c.dim() << " ";
  os << "\n";
  for (int i = 0; i < nz; ++i) os << "0 ";
  os << "\n";
  int blk = 1;
  for (const auto& c : p.constraints()) {
    SparseCoeffs sc = expand_constraint(p, L, c);
    // -F(z) >= 0  ->  F_0 = F_const, F_i = -F_p
    auto emit = [&](int mat, const MatrixXd& M) {
      for (int r = 0; r < M.rows(); ++r)
        for (int k = r; k < M.cols(); ++k)
          if (M(r, k) != 0.0) os << mat << " " << blk << " " << r + 1 << " " << k + 1 << " " << M(r, k) << "\n";
    };
    emit(0, sc.constant);
    for (const auto& [pi, M] : sc.by_param) emit(pi + 1, -M);
    ++blk;
  }
  return os.str();
}

}  // namespace lmi
}  // namespace admmcert
