#include "admmcert/certification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace admmcert {

using lmi::AffineExpr;
using lmi::Constraint;
using lmi::LmiProblem;
using lmi::VarId;
using lmi::VarKind;

const char* to_string(Method m) {
  switch (m) {
    case Method::Thm1: return "thm1";
    case Method::Thm2: return "thm2";
    case Method::Cor1: return "cor1";
    case Method::LinC1Finsler: return "c1-finsler";
    case Method::LinC1Sqlf: return "c1-sqlf";
    case Method::LinC1Cqlf: return "c1-cqlf";
    case Method::LinC2: return "c2";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::Thm1, Method::Thm2, Method::Cor1, Method::LinC1Finsler, Method::LinC1Sqlf,
                   Method::LinC1Cqlf, Method::LinC2})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown method '" + s + "'");
}

bool is_linear(Method m) { return m != Method::Thm1 && m != Method::Thm2 && m != Method::Cor1; }

std::vector<Pair> pair_list(int k, Mode mode, const CertifyOptions& opts) {
  if (!opts.pairs.empty()) return opts.pairs;
  if (mode == Mode::Jacobi || k == 1) return {{0, 0}};
  std::vector<Pair> out;
  if (opts.pair_set == PairSet::FullProduct) {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) out.push_back({i, j});
    return out;
  }
  std::vector<int> ord = opts.order;
  if (ord.empty())
    for (int i = 0; i < k; ++i) ord.push_back(i);
  for (size_t a = 0; a < ord.size(); ++a) out.push_back({ord[a], ord[(a + 1) % ord.size()]});
  return out;
}

const MatrixXd& RateCertificate::P_for(int s) const {
  for (size_t a = 0; a < p_index.size(); ++a)
    if (p_index[a] == s || p_index[a] == -1) return P[a];
  throw std::out_of_range("certificate has no P for this subsystem");
}

namespace {

MatrixXd I(int n) { return MatrixXd::Identity(n, n); }

AffineExpr term(VarId v, const MatrixXd& L, const MatrixXd& R, bool tr = false) {
  AffineExpr e(static_cast<int>(L.rows()), static_cast<int>(R.cols()));
  e.add(v, L, R, tr);
  return e;
}

struct Vars {
  std::map<int, VarId> P;  // by subsystem; key -1 = common
  VarId Gamma;
  std::map<int, VarId> U1, U2, U3;
};

std::set<int> used(const std::vector<Pair>& pairs) {
  std::set<int> s;
  for (auto [i, j] : pairs) {
    s.insert(i);
    s.insert(j);
  }
  return s;
}

void add_P(LmiProblem& p, Vars& v, const std::vector<Pair>& pairs, int n, bool common) {
  if (common) {
    v.P[-1] = p.add_variable("P", n, n, VarKind::PositiveDefinite);
    return;
  }
  for (int s : used(pairs)) v.P[s] = p.add_variable("P" + std::to_string(s + 1), n, n, VarKind::PositiveDefinite);
}

VarId Pvar(const Vars& v, int s) {
  auto it = v.P.find(-1);
  if (it != v.P.end()) return it->second;
  return v.P.at(s);
}

// 2x2 block sector form shared by Thm1 and Cor1
Constraint sector_pair(const SwitchedSystem& sys, const Vars& v, int i, int j, double tau, SectorSign sign) {
  int n = sys.n;
  double s = sign == SectorSign::Lure ? -1.0 : 1.0;
  MatrixXd A = sys.A_hat(i), C = sys.C_hat(i);
  VarId Pi = Pvar(v, i), Pj = Pvar(v, j);
  Constraint c{"pair(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")", {n, n}, {}};
  AffineExpr b11 = term(Pj, A.transpose(), A);
  b11 += term(Pi, -tau * tau * I(n), I(n));
  b11 += term(v.Gamma, s * I(n), sys.sector.F1);
  AffineExpr b12 = term(Pj, A.transpose(), C);
  b12 += term(v.Gamma, I(n), sys.sector.F2);
  AffineExpr b22 = term(Pj, C.transpose(), C);
  b22 += term(v.Gamma, s * I(n), I(n));
  c.set(0, 0, b11);
  c.set(0, 1, b12);
  c.set(1, 1, b22);
  return c;
}

RateCertificate package(const LmiProblem& p, const Vars& v, const lmi::FeasibilityResult& r, double tau, Method m,
                        const std::vector<Pair>& pairs, SectorSign sign) {
  RateCertificate c;
  c.tau = tau;
  c.method = m;
  c.sector_sign = sign;
  c.pairs = pairs;
  for (const auto& [s, id] : v.P) {
    c.p_index.push_back(s);
    c.P.push_back(r.assignment[id.index]);
  }
  if (v.Gamma.index >= 0) c.Gamma = r.assignment[v.Gamma.index];
  for (const auto& [s, id] : v.U3) {
    c.aux_index.push_back(s);
    c.U3.push_back(r.assignment[id.index]);
    if (v.U1.count(s)) c.U1.push_back(r.assignment[v.U1.at(s).index]);
    if (v.U2.count(s)) c.U2.push_back(r.assignment[v.U2.at(s).index]);
  }
  c.margin = r.margin;
  c.chi = envelope_chi(c.P);
  c.assignment = r.assignment;
  (void)p;
  return c;
}

struct Built {
  LmiProblem p;
  Vars v;
  std::vector<Pair> pairs;
};

Built build_thm1(const SwitchedSystem& sys, double tau, const CertifyOptions& o, bool common) {
  Built b;
  b.pairs = pair_list(sys.subsystem_count(), sys.mode, o);
  add_P(b.p, b.v, b.pairs, sys.n, common);
  b.v.Gamma = b.p.add_variable("Gamma", sys.n, sys.n, VarKind::DiagonalNonneg);
  if (common) {
    // one constraint per active subsystem
    std::set<int> seen;
    for (auto [i, j] : b.pairs)
      if (seen.insert(i).second) {
        Constraint c = sector_pair(sys, b.v, i, i, tau, o.sector_sign);
        c.label = "subsystem(" + std::to_string(i + 1) + ")";
        b.p.add_constraint(c);
      }
  } else {
    for (auto [i, j] : b.pairs) b.p.add_constraint(sector_pair(sys, b.v, i, j, tau, o.sector_sign));
  }
  return b;
}

Built build_thm2(const SwitchedSystem& sys, double tau, const CertifyOptions& o) {
  Built b;
  int n = sys.n;
  double s = o.sector_sign == SectorSign::Lure ? -1.0 : 1.0;
  b.pairs = pair_list(sys.subsystem_count(), sys.mode, o);
  add_P(b.p, b.v, b.pairs, n, false);
  b.v.Gamma = b.p.add_variable("Gamma", n, n, VarKind::DiagonalNonneg);
  std::set<int> firsts;
  for (auto [i, j] : b.pairs) firsts.insert(i);
  for (int i : firsts) {
    std::string k = std::to_string(i + 1);
    b.v.U1[i] = b.p.add_variable("U1_" + k, n, n, VarKind::Full);
    b.v.U2[i] = b.p.add_variable("U2_" + k, n, n, VarKind::Full);
    b.v.U3[i] = b.p.add_variable("U3_" + k, n, n, VarKind::Full);
  }
  for (auto [i, j] : b.pairs) {
    MatrixXd A = sys.A_hat(i), C = sys.C_hat(i);
    VarId Pi = b.v.P.at(i), Pj = b.v.P.at(j), U1 = b.v.U1.at(i), U2 = b.v.U2.at(i), U3 = b.v.U3.at(i);
    Constraint c{"pair(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")", {n, n, n}, {}};
    AffineExpr x11 = term(U1, I(n), A);
    x11 += term(U1, A.transpose(), I(n), true);
    x11 += term(Pi, -tau * tau * I(n), I(n));
    x11 += term(b.v.Gamma, s * I(n), sys.sector.F1);
    AffineExpr x12 = term(U2, A.transpose(), I(n), true);
    x12 += term(U1, I(n), C);
    x12 += term(b.v.Gamma, I(n), sys.sector.F2);
    AffineExpr x13 = term(U3, A.transpose(), I(n), true);
    x13 += term(U1, -I(n), I(n));
    AffineExpr x22 = term(U2, C.transpose(), I(n), true);
    x22 += term(U2, I(n), C);
    x22 += term(b.v.Gamma, s * I(n), I(n));
    AffineExpr x23 = term(U3, C.transpose(), I(n), true);
    x23 += term(U2, -I(n), I(n));
    AffineExpr x33 = term(Pj, I(n), I(n));
    x33 += term(U3, -I(n), I(n), true);
    x33 += term(U3, -I(n), I(n));
    c.set(0, 0, x11);
    c.set(0, 1, x12);
    c.set(0, 2, x13);
    c.set(1, 1, x22);
    c.set(1, 2, x23);
    c.set(2, 2, x33);
    b.p.add_constraint(c);
  }
  return b;
}

Built build_linear(const LinearSwitchedSystem& sys, double tau, LinearForm form, const CertifyOptions& o) {
  Built b;
  int n = sys.n;
  b.pairs = pair_list(sys.subsystem_count(), sys.mode, o);
  bool common = form == LinearForm::Cqlf;
  add_P(b.p, b.v, b.pairs, n, common);
  if (form == LinearForm::Finsler) {
    std::set<int> firsts;
    for (auto [i, j] : b.pairs) firsts.insert(i);
    for (int i : firsts) {
      std::string k = std::to_string(i + 1);
      b.v.U1[i] = b.p.add_variable("U1_" + k, n, n, VarKind::Full);
      b.v.U3[i] = b.p.add_variable("U3_" + k, n, n, VarKind::Full);
    }
  }
  std::set<int> seen;
  for (auto [i, j] : b.pairs) {
    MatrixXd A = sys.Bbar(i);
    VarId Pi = Pvar(b.v, i), Pj = Pvar(b.v, j);
    std::string label = "pair(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
    if (form == LinearForm::Finsler) {
      VarId U1 = b.v.U1.at(i), U3 = b.v.U3.at(i);
      Constraint c{label, {n, n}, {}};
      AffineExpr x11 = term(U1, I(n), A);
      x11 += term(U1, A.transpose(), I(n), true);
      x11 += term(Pi, -tau * tau * I(n), I(n));
      AffineExpr x12 = term(U3, A.transpose(), I(n), true);
      x12 += term(U1, -I(n), I(n));
      AffineExpr x22 = term(Pj, I(n), I(n));
      x22 += term(U3, -I(n), I(n), true);
      x22 += term(U3, -I(n), I(n));
      c.set(0, 0, x11);
      c.set(0, 1, x12);
      c.set(1, 1, x22);
      b.p.add_constraint(c);
    } else {
      if (common && !seen.insert(i).second) continue;
      Constraint c{common ? "subsystem(" + std::to_string(i + 1) + ")" : label, {n}, {}};
      AffineExpr e = term(Pj, A.transpose(), A);
      e += term(Pi, -tau * tau * I(n), I(n));
      c.set(0, 0, e);
      b.p.add_constraint(c);
    }
  }
  return b;
}

LinearForm form_of(Method m) {
  switch (m) {
    case Method::LinC1Finsler: return LinearForm::Finsler;
    case Method::LinC1Sqlf: return LinearForm::Sqlf;
    case Method::LinC1Cqlf:
    case Method::LinC2: return LinearForm::Cqlf;
    default: throw std::invalid_argument("method is not a linearized condition");
  }
}

Built build(const SwitchedSystem& sys, double tau, Method m, const CertifyOptions& o) {
  switch (m) {
    case Method::Thm1: return build_thm1(sys, tau, o, false);
    case Method::Cor1: return build_thm1(sys, tau, o, true);
    case Method::Thm2: return build_thm2(sys, tau, o);
    default: throw std::invalid_argument("linearized methods need a LinearSwitchedSystem");
  }
}

Built build(const LinearSwitchedSystem& sys, double tau, Method m, const CertifyOptions& o) {
  return build_linear(sys, tau, form_of(m), o);
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
}

template <class Sys>
CertifyOutcome certify_impl(const Sys& sys, double tau, Method m, const CertifyOptions& o) {
  check_tau(tau);
  Built b = build(sys, tau, m, o);
  CertifyOutcome out;
  out.raw = lmi::solve_feasibility(b.p, o.solver);
  out.status = out.raw.status;
  if (out.status == lmi::Status::Feasible)
    out.cert = package(b.p, b.v, out.raw, tau, m, b.pairs, o.sector_sign);
  return out;
}

template <class Sys>
lmi::VerificationReport verify_impl(const Sys& sys, const RateCertificate& c, const CertifyOptions& o) {
  CertifyOptions oo = o;
  oo.pairs = c.pairs;
  oo.sector_sign = c.sector_sign;
  Built b = build(sys, c.tau, c.method, oo);
  return lmi::verify_assignment(b.p, c.assignment, o.solver.eps);
}

template <class Sys>
MinRateResult min_rate_impl(const Sys& sys, Method m, double tol, const CertifyOptions& o) {
  if (!(tol > 0.0 && tol < 0.5)) throw std::invalid_argument("tol must lie in (0, 0.5)");
  MinRateResult res;
  auto probe = [&](double tau) {
    ++res.probes;
    CertifyOutcome c = certify_impl(sys, tau, m, o);
    if (c.status == lmi::Status::NumericalFailure) res.numerical_failure = true;
    return c;
  };
  double top = 1.0 - tol;
  CertifyOutcome t = probe(top);
  if (!t.cert) return res;
  std::optional<RateCertificate> best = t.cert;
  double hi = top;
  CertifyOutcome bottom = probe(tol);
  if (bottom.cert) {
    res.tau = tol;
    res.cert = bottom.cert;
    return res;
  }
  double lo = tol;
  for (int repair = 0; repair < 4; ++repair) {
    while (hi - lo > tol) {
      double mid = 0.5 * (lo + hi);
      CertifyOutcome c = probe(mid);
      if (c.cert) {
        hi = mid;
        best = c.cert;
      } else {
        lo = mid;
      }
    }
    // monotonicity defense: a point above the answer must stay feasible
    double check = hi + 0.5 * (top - hi);
    if (check - hi <= tol) break;
    if (probe(check).cert) break;
    res.monotonicity_warning = true;
    lo = check;
    hi = top;
    best = t.cert;
  }
  res.tau = hi;
  res.cert = best;
  return res;
}

}  // namespace

LmiProblem assemble_thm1(const SwitchedSystem& sys, double tau, const CertifyOptions& o) {
  return build_thm1(sys, tau, o, false).p;
}
LmiProblem assemble_thm2(const SwitchedSystem& sys, double tau, const CertifyOptions& o) {
  return build_thm2(sys, tau, o).p;
}
LmiProblem assemble_cor1(const SwitchedSystem& sys, double tau, const CertifyOptions& o) {
  return build_thm1(sys, tau, o, true).p;
}
LmiProblem assemble_linear(const LinearSwitchedSystem& sys, double tau, LinearForm form, const CertifyOptions& o) {
  return build_linear(sys, tau, form, o).p;
}
LmiProblem assemble(const SwitchedSystem& sys, double tau, Method m, const CertifyOptions& o) {
  return build(sys, tau, m, o).p;
}
LmiProblem assemble(const LinearSwitchedSystem& sys, double tau, Method m, const CertifyOptions& o) {
  return build(sys, tau, m, o).p;
}

CertifyOutcome certify(const SwitchedSystem& sys, double tau, Method m, const CertifyOptions& o) {
  return certify_impl(sys, tau, m, o);
}
CertifyOutcome certify(const LinearSwitchedSystem& sys, double tau, Method m, const CertifyOptions& o) {
  return certify_impl(sys, tau, m, o);
}

lmi::VerificationReport verify_certificate(const SwitchedSystem& sys, const RateCertificate& c,
                                           const CertifyOptions& o) {
  return verify_impl(sys, c, o);
}
lmi::VerificationReport verify_certificate(const LinearSwitchedSystem& sys, const RateCertificate& c,
                                           const CertifyOptions& o) {
  return verify_impl(sys, c, o);
}

double envelope_chi(const std::vector<MatrixXd>& P) {
  if (P.empty()) return 1.0;
  double hi = 0.0, lo = INFINITY;
  for (const auto& M : P) {
    VectorXd ev = eigvals_sym(0.5 * (M + M.transpose()));
    hi = std::max(hi, ev(ev.size() - 1));
    lo = std::min(lo, ev(0));
  }
  return std::sqrt(hi / lo);
}

MinRateResult min_rate(const SwitchedSystem& sys, Method m, double tol, const CertifyOptions& o) {
  return min_rate_impl(sys, m, tol, o);
}
MinRateResult min_rate(const LinearSwitchedSystem& sys, Method m, double tol, const CertifyOptions& o) {
  return min_rate_impl(sys, m, tol, o);
}

}  // namespace admmcert
