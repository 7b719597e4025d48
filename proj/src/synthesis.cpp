#include "admmcert/synthesis.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace admmcert {

using lmi::AffineExpr;
using lmi::Constraint;
using lmi::LmiProblem;
using lmi::VarId;
using lmi::VarKind;

const char* to_string(SynthForm f) {
  switch (f) {
    case SynthForm::Thm3: return "thm3";
    case SynthForm::Cor2: return "cor2";
    case SynthForm::C3: return "c3";
    case SynthForm::C4: return "c4";
    case SynthForm::C5: return "c5";
    case SynthForm::C6: return "c6";
  }
  return "?";
}

SynthForm synth_form_from_string(const std::string& s) {
  for (SynthForm f : {SynthForm::Thm3, SynthForm::Cor2, SynthForm::C3, SynthForm::C4, SynthForm::C5, SynthForm::C6})
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown synthesis form '" + s + "'");
}

namespace {

MatrixXd I(int n) { return MatrixXd::Identity(n, n); }
MatrixXd e(int n, int i) {
  MatrixXd v = MatrixXd::Zero(n, 1);
  v(i, 0) = 1.0;
  return v;
}

AffineExpr term(VarId v, const MatrixXd& L, const MatrixXd& R, bool tr = false) {
  AffineExpr x(static_cast<int>(L.rows()), static_cast<int>(R.cols()));
  x.add(v, L, R, tr);
  return x;
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
}

double cond(const MatrixXd& M) {
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const VectorXd& s = svd.singularValues();
  return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
}

// column i of U restricted to v_i e_i, then U D_i K_i = e_i h^T with h free
struct ColumnFinsler {
  LmiProblem p;
  std::map<int, VarId> P, U3, h;
  VarId Gamma;
};

void pin_column(LmiProblem& p, VarId U, int n, int i) {
  for (int r = 0; r < n; ++r)
    if (r != i) p.add_equality("U3 column", term(U, e(n, r).transpose(), e(n, i)));
}

SynthesisOutcome finish(SynthesisOutcome out, const MatrixXd& K, SynthForm f, double tau,
                        std::optional<RateCertificate> cert, const std::string& why) {
  if (!cert) {
    out.status = lmi::Status::NumericalFailure;
    out.message = "closed-loop re-certification failed" + (why.empty() ? "" : ": " + why);
    return out;
  }
  out.status = lmi::Status::Feasible;
  out.controller = Controller{K, f, tau, *cert};
  return out;
}

std::optional<RateCertificate> recert(const SwitchedSystem& cl, double tau, const CertifyOptions& o) {
  for (Method m : {Method::Thm1, Method::Thm2}) {
    auto c = certify(cl, tau, m, o);
    if (c.cert) return c.cert;
  }
  return std::nullopt;
}

std::optional<RateCertificate> recert(const LinearSwitchedSystem& cl, double tau, Method m, const CertifyOptions& o) {
  auto c = certify(cl, tau, m, o);
  if (c.cert) return c.cert;
  return std::nullopt;
}

}  // namespace

SynthesisOutcome synthesize_gs(const SwitchedSystem& sys, double tau, const SynthesisOptions& opts) {
  check_tau(tau);
  if (sys.mode != Mode::GaussSeidel) throw std::invalid_argument("synthesize_gs: Gauss-Seidel system required");
  int n = sys.n;
  for (int i = 0; i < n; ++i)
    if (sys.D(i, i) == 0.0) throw std::invalid_argument("synthesize_gs: D has a zero diagonal entry");
  double s = opts.cert.sector_sign == SectorSign::Lure ? -1.0 : 1.0;
  auto pairs = pair_list(n, sys.mode, opts.cert);
  LmiProblem p;
  std::map<int, VarId> P, U3, h;
  std::set<int> all, firsts;
  for (auto [i, j] : pairs) {
    all.insert(i);
    all.insert(j);
    firsts.insert(i);
  }
  for (int i : all) P[i] = p.add_variable("P" + std::to_string(i + 1), n, n, VarKind::PositiveDefinite);
  VarId G = p.add_variable("Gamma", n, n, VarKind::DiagonalNonneg);
  for (int i : firsts) {
    U3[i] = p.add_variable("U3_" + std::to_string(i + 1), n, n, VarKind::Full);
    h[i] = p.add_variable("h" + std::to_string(i + 1), n, 1, VarKind::Full);
    pin_column(p, U3[i], n, i);
  }
  for (auto [i, j] : pairs) {
    MatrixXd A = sys.A_hat(i), C = sys.C_hat(i);
    Constraint c{"pair(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")", {n, n, n}, {}};
    AffineExpr x11 = term(P[i], -tau * tau * I(n), I(n));
    x11 += term(G, s * I(n), sys.sector.F1);
    AffineExpr x13 = term(U3[i], A.transpose(), I(n), true);
    x13 += term(h[i], I(n), e(n, i).transpose());
    AffineExpr x33 = term(P[j], I(n), I(n));
    x33 += term(U3[i], -I(n), I(n));
    x33 += term(U3[i], -I(n), I(n), true);
    c.set(0, 0, x11);
    c.set(0, 1, term(G, I(n), sys.sector.F2));
    c.set(0, 2, x13);
    c.set(1, 1, term(G, s * I(n), I(n)));
    c.set(1, 2, term(U3[i], C.transpose(), I(n), true));
    c.set(2, 2, x33);
    p.add_constraint(c);
  }
  SynthesisOutcome out;
  auto r = lmi::solve_feasibility(p, opts.cert.solver);
  out.status = r.status;
  if (r.status != lmi::Status::Feasible) {
    out.message = r.message;
    return out;
  }
  MatrixXd K = MatrixXd::Zero(n, n);
  for (int i : firsts) {
    const MatrixXd& U = r.assignment[U3[i].index];
    if (cond(U) > 1e12) {
      out.status = lmi::Status::NumericalFailure;
      out.message = "U3 numerically singular";
      return out;
    }
    double vi = U(i, i);
    K.row(i) = r.assignment[h[i].index].transpose() / (vi * sys.D(i, i));
  }
  auto cl = apply_controller(sys, K);
  return finish(out, K, SynthForm::Thm3, tau, recert(cl, tau, opts.cert), "");
}

SynthesisOutcome synthesize_pj(const SwitchedSystem& sys, double tau, const SynthesisOptions& opts) {
  check_tau(tau);
  if (sys.mode != Mode::Jacobi) throw std::invalid_argument("synthesize_pj: Jacobi system required");
  int n = sys.n;
  for (int i = 0; i < n; ++i)
    if (sys.D(i, i) == 0.0) throw std::invalid_argument("synthesize_pj: D must be invertible");
  double s = opts.cert.sector_sign == SectorSign::Lure ? -1.0 : 1.0;
  MatrixXd B = sys.closed_loop(), C = sys.C, D = sys.D;
  LmiProblem p;
  VarId P = p.add_variable("P", n, n, VarKind::PositiveDefinite);
  VarId U = p.add_variable("U3", n, n, VarKind::Full);
  VarId V = p.add_variable("V", n, n, VarKind::Full);
  VarId H = p.add_variable("H", n, n, VarKind::Full);
  VarId G = p.add_variable("Gamma", n, n, VarKind::DiagonalNonneg);
  Constraint c{"closed-loop", {n, n, n}, {}};
  AffineExpr x11 = term(P, -tau * tau * I(n), I(n));
  x11 += term(G, s * I(n), sys.sector.F1);
  AffineExpr x13 = term(U, B.transpose(), I(n), true);
  x13 += term(H, I(n), D.transpose(), true);
  AffineExpr x33 = term(P, I(n), I(n));
  x33 += term(U, -I(n), I(n));
  x33 += term(U, -I(n), I(n), true);
  c.set(0, 0, x11);
  c.set(0, 1, term(G, I(n), sys.sector.F2));
  c.set(0, 2, x13);
  c.set(1, 1, term(G, s * I(n), I(n)));
  c.set(1, 2, term(U, C.transpose(), I(n), true));
  c.set(2, 2, x33);
  p.add_constraint(c);
  AffineExpr eq = term(U, I(n), D);
  eq += term(V, -D, I(n));
  p.add_equality("U3 D = D V", eq);
  SynthesisOutcome out;
  auto r = lmi::solve_feasibility(p, opts.cert.solver);
  out.status = r.status;
  if (r.status != lmi::Status::Feasible) {
    out.message = r.message;
    return out;
  }
  const MatrixXd& Vm = r.assignment[V.index];
  if (cond(Vm) > 1e12) {
    out.status = lmi::Status::NumericalFailure;
    out.message = "V numerically singular";
    return out;
  }
  MatrixXd K = Vm.fullPivLu().solve(r.assignment[H.index]);
  auto cl = apply_controller(sys, K);
  CertifyOptions o = opts.cert;
  return finish(out, K, SynthForm::Cor2, tau, recert(cl, tau, o), "");
}

SynthesisOutcome synthesize_linear(const LinearSwitchedSystem& sys, double tau, SynthForm form,
                                   const SynthesisOptions& opts) {
  check_tau(tau);
  int n = sys.n;
  bool gs = sys.mode == Mode::GaussSeidel;
  if ((form == SynthForm::C3 || form == SynthForm::C4) && !gs)
    throw std::invalid_argument("C3/C4 need a Gauss-Seidel system");
  if ((form == SynthForm::C5 || form == SynthForm::C6) && gs) throw std::invalid_argument("C5/C6 need a Jacobi system");
  if (form == SynthForm::Thm3 || form == SynthForm::Cor2)
    throw std::invalid_argument("use synthesize_gs/synthesize_pj for nonlinear forms");
  const MatrixXd& D = sys.D;
  auto pairs = pair_list(sys.subsystem_count(), sys.mode, opts.cert);
  LmiProblem p;
  SynthesisOutcome out;
  MatrixXd K = MatrixXd::Zero(n, n);
  Method check = Method::LinC2;

  if (form == SynthForm::C4 || form == SynthForm::C6) {
    VarId Q = p.add_variable("Q", n, n, VarKind::PositiveDefinite);
    std::map<int, VarId> N;
    std::set<int> subs;
    for (auto [i, j] : pairs) subs.insert(i);
    for (int i : subs) {
      if (gs)
        N[i] = p.add_variable("N" + std::to_string(i + 1), 1, n, VarKind::Full);
      else
        N[i] = p.add_variable("N", n, n, VarKind::Full);
      Constraint c{"schur(" + std::to_string(i + 1) + ")", {n, n}, {}};
      AffineExpr b12 = term(Q, sys.Bbar(i), I(n));
      if (gs)
        b12 += term(N[i], D(i, i) * e(n, i), I(n));
      else
        b12 += term(N[i], D, I(n));
      c.set(0, 0, term(Q, -I(n), I(n)));
      c.set(0, 1, b12);
      c.set(1, 1, term(Q, -tau * tau * I(n), I(n)));
      p.add_constraint(c);
      if (opts.gain_bound) {
        int rows = gs ? 1 : n;
        Constraint g{"gain(" + std::to_string(i + 1) + ")", {rows, n}, {}};
        g.set(0, 0, AffineExpr::constant(-I(rows)));
        g.set(0, 1, term(N[i], I(rows), I(n)));
        g.set(1, 1, AffineExpr::constant(-*opts.gain_bound * I(n)));
        p.add_constraint(g);
      }
    }
    auto r = lmi::solve_feasibility(p, opts.cert.solver);
    out.status = r.status;
    if (r.status != lmi::Status::Feasible) {
      out.message = r.message;
      return out;
    }
    MatrixXd Qinv = r.assignment[Q.index].inverse();
    for (int i : subs) {
      if (gs)
        K.row(i) = r.assignment[N[i].index] * Qinv;
      else
        K = r.assignment[N[i].index] * Qinv;
    }
    check = gs ? Method::LinC1Cqlf : Method::LinC2;
  } else {
    // Finsler forms
    std::map<int, VarId> P, U, h;
    std::set<int> all, firsts;
    for (auto [i, j] : pairs) {
      all.insert(i);
      all.insert(j);
      firsts.insert(i);
    }
    VarId Vv, Hv;
    for (int i : all) P[i] = p.add_variable("P" + std::to_string(i + 1), n, n, VarKind::PositiveDefinite);
    for (int i : firsts) {
      U[i] = p.add_variable("U3_" + std::to_string(i + 1), n, n, VarKind::Full);
      if (gs) {
        h[i] = p.add_variable("h" + std::to_string(i + 1), n, 1, VarKind::Full);
        pin_column(p, U[i], n, i);
      }
    }
    if (!gs) {
      for (int i = 0; i < n; ++i)
        if (D(i, i) == 0.0) throw std::invalid_argument("C5: D must be invertible");
      Vv = p.add_variable("V", n, n, VarKind::Full);
      Hv = p.add_variable("H", n, n, VarKind::Full);
      AffineExpr eq = term(U[0], I(n), D);
      eq += term(Vv, -D, I(n));
      p.add_equality("U3 D = D V", eq);
    }
    for (auto [i, j] : pairs) {
      MatrixXd A = sys.Bbar(i);
      Constraint c{"pair(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")", {n, n}, {}};
      AffineExpr b12 = term(U[i], A.transpose(), I(n), true);
      if (gs)
        b12 += term(h[i], I(n), e(n, i).transpose());
      else
        b12 += term(Hv, I(n), D.transpose(), true);
      AffineExpr b22 = term(P[j], I(n), I(n));
      b22 += term(U[i], -I(n), I(n));
      b22 += term(U[i], -I(n), I(n), true);
      c.set(0, 0, term(P[i], -tau * tau * I(n), I(n)));
      c.set(0, 1, b12);
      c.set(1, 1, b22);
      p.add_constraint(c);
    }
    auto r = lmi::solve_feasibility(p, opts.cert.solver);
    out.status = r.status;
    if (r.status != lmi::Status::Feasible) {
      out.message = r.message;
      return out;
    }
    if (gs) {
      for (int i : firsts) {
        const MatrixXd& Um = r.assignment[U[i].index];
        if (cond(Um) > 1e12) {
          out.status = lmi::Status::NumericalFailure;
          out.message = "U3 numerically singular";
          return out;
        }
        K.row(i) = r.assignment[h[i].index].transpose() / (Um(i, i) * D(i, i));
      }
      check = Method::LinC1Sqlf;
    } else {
      const MatrixXd& Vm = r.assignment[Vv.index];
      if (cond(Vm) > 1e12) {
        out.status = lmi::Status::NumericalFailure;
        out.message = "V numerically singular";
        return out;
      }
      K = Vm.fullPivLu().solve(r.assignment[Hv.index]);
      check = Method::LinC2;
    }
  }
  auto cl = apply_controller(sys, K);
  return finish(out, K, form, tau, recert(cl, tau, check, opts.cert), "");
}

lmi::VerificationReport verify_controller(const SwitchedSystem& sys, const Controller& c, const CertifyOptions& o) {
  return verify_certificate(apply_controller(sys, c.K), c.certificate, o);
}

lmi::VerificationReport verify_controller(const LinearSwitchedSystem& sys, const Controller& c,
                                          const CertifyOptions& o) {
  return verify_certificate(apply_controller(sys, c.K), c.certificate, o);
}

std::vector<ConstraintHyperplane> controller_constraints(const MatrixXd& K, const MatrixXd& xi_star, bool estimated) {
  if (xi_star.rows() != K.cols()) throw std::invalid_argument("controller_constraints: equilibrium size mismatch");
  std::vector<ConstraintHyperplane> out;
  for (int i = 0; i < K.rows(); ++i) {
    ConstraintHyperplane h;
    h.row = i;
    h.coefficients = K.row(i).transpose();
    h.rhs = (K.row(i) * xi_star).transpose();
    h.degenerate = h.coefficients.cwiseAbs().maxCoeff() == 0.0;
    h.estimated = estimated;
    out.push_back(h);
  }
  return out;
}

std::string format_hyperplane(const ConstraintHyperplane& h, const std::vector<std::string>& labels, int precision) {
  if (h.degenerate) return "no constraint";
  std::ostringstream os;
  char buf[64];
  for (int j = 0; j < h.coefficients.size(); ++j) {
    double c = h.coefficients(j);
    std::snprintf(buf, sizeof buf, "%.*f", precision, std::abs(c));
    if (j == 0)
      os << (c < 0 ? "-" : "") << buf << labels.at(j);
    else
      os << (c < 0 ? " - " : " + ") << buf << labels.at(j);
  }
  os << " = ";
  if (h.rhs.size() == 1) {
    std::snprintf(buf, sizeof buf, "%.*f", precision, h.rhs(0) == 0.0 ? 0.0 : h.rhs(0));
    os << buf;
  } else {
    os << "[";
    for (int k = 0; k < h.rhs.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.*f", precision, h.rhs(k) == 0.0 ? 0.0 : h.rhs(k));
      os << (k ? ", " : "") << buf;
    }
    os << "]";
  }
  if (h.estimated) os << " (estimated equilibrium)";
  return os.str();
}

std::vector<std::string> reduced_labels(int n) {
  std::vector<std::string> l;
  for (int i = 1; i < n; ++i) l.push_back("xi" + std::to_string(i));
  l.push_back("lambda");
  return l;
}

}  // namespace admmcert
