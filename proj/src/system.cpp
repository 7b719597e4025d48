#include "admmcert/system.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace admmcert {

ObjectiveDesc ObjectiveDesc::quadratic(double c, int dims) {
  ObjectiveDesc o;
  o.kind = Kind::Quadratic;
  o.c = c;
  o.nu_minus.assign(dims, 2.0 * c);
  o.nu_plus.assign(dims, 2.0 * c);
  return o;
}

ObjectiveDesc ObjectiveDesc::l1(double r, int dims) {
  ObjectiveDesc o;
  o.kind = Kind::L1;
  o.r = r;
  // shrinkage gain rho in [0, 1)
  o.nu_minus.assign(dims, 0.0);
  o.nu_plus.assign(dims, 1.0 - 1e-9);
  return o;
}

ObjectiveDesc ObjectiveDesc::sector(double lo, double hi, int dims) {
  ObjectiveDesc o;
  o.kind = Kind::SectorOnly;
  o.nu_minus.assign(dims, lo);
  o.nu_plus.assign(dims, hi);
  return o;
}

void validate(const ProblemSpec& s) {
  if (s.blocks.empty()) throw std::invalid_argument("blocks: at least one block is required");
  if (!(s.beta > 0.0)) throw std::invalid_argument("beta: must be > 0");
  if (!(s.gamma > 0.0)) throw std::invalid_argument("gamma: must be > 0");
  if (s.alpha.size() != s.blocks.size()) throw std::invalid_argument("alpha: one value per block required");
  for (size_t i = 0; i < s.blocks.size(); ++i) {
    std::string at = "blocks[" + std::to_string(i) + "]";
    const auto& b = s.blocks[i];
    if (!(s.alpha[i] > 0.0)) throw std::invalid_argument("alpha[" + std::to_string(i) + "]: must be > 0");
    if (!(b.sigma_min > 0.0) || !(b.sigma_max > 0.0))
      throw std::invalid_argument(at + ": singular values must be > 0");
    if (b.sigma_min > b.sigma_max * (1.0 + 1e-12))
      throw std::invalid_argument(at + ": sigma_min exceeds sigma_max");
    const auto& o = b.objective;
    if (o.nu_minus.size() != o.nu_plus.size() || o.nu_minus.empty())
      throw std::invalid_argument(at + ".objective: slope bounds missing or mismatched");
    for (size_t j = 0; j < o.nu_minus.size(); ++j)
      if (o.nu_minus[j] > o.nu_plus[j]) throw std::invalid_argument(at + ".objective: nu_minus > nu_plus");
    if (o.kind == ObjectiveDesc::Kind::L1 && o.r < 0.0) throw std::invalid_argument(at + ".objective: r < 0");
  }
}

bool indefinite_prox(const ProblemSpec& s) {
  if (s.variant != Variant::ProxMinusBeta) return false;
  for (size_t i = 0; i < s.blocks.size(); ++i)
    if (s.alpha[i] < s.beta * s.blocks[i].norm_sq()) return true;
  return false;
}

SectorBounds build_sector_bounds(const ProblemSpec& spec) {
  validate(spec);
  int N = spec.n_blocks();
  SectorBounds sb;
  sb.mu_minus = VectorXd::Zero(N);
  sb.mu_plus = VectorXd::Zero(N);
  for (int i = 0; i < N; ++i) {
    const auto& b = spec.blocks[i];
    double s1 = b.sigma_max * b.sigma_max, sp = b.sigma_min * b.sigma_min;
    double lo = INFINITY, hi_max = -INFINITY, hi_min = INFINITY;
    for (size_t j = 0; j < b.objective.nu_minus.size(); ++j) {
      double nm = b.objective.nu_minus[j], np = b.objective.nu_plus[j];
      lo = std::min({lo, nm / s1, nm / sp});
      hi_max = std::max({hi_max, np / s1, np / sp});
      hi_min = std::min({hi_min, np / s1, np / sp});
    }
    sb.mu_minus(i) = lo;
    sb.mu_plus(i) = spec.mu_convention == MuConvention::Conservative ? hi_max : hi_min;
  }
  sb.F1 = MatrixXd::Zero(N + 1, N + 1);
  sb.F2 = MatrixXd::Zero(N + 1, N + 1);
  for (int i = 0; i < N; ++i) {
    sb.F1(i, i) = sb.mu_minus(i) * sb.mu_plus(i);
    sb.F2(i, i) = 0.5 * (sb.mu_minus(i) + sb.mu_plus(i));
  }
  return sb;
}

SwitchedSystem build_system(const ProblemSpec& spec, Mode mode) {
  SwitchedSystem sys;
  sys.sector = build_sector_bounds(spec);
  int N = spec.n_blocks(), n = N + 1;
  sys.n = n;
  sys.mode = mode;
  sys.dual_sign = spec.dual_sign;
  sys.B = MatrixXd::Zero(n, n);
  sys.C = MatrixXd::Zero(n, n);
  sys.D = MatrixXd::Zero(n, n);
  sys.E = MatrixXd::Zero(n, n);
  sys.K = MatrixXd::Zero(n, n);
  const double beta = spec.beta, gb = spec.gamma * spec.beta;
  for (int i = 0; i < N; ++i) {
    double ah = spec.alpha_hat(i);
    if (spec.variant == Variant::ProxMinusBeta) {
      for (int j = 0; j < N; ++j) sys.B(i, j) = -beta / ah;
      sys.B(i, i) += 1.0;
      sys.B(i, N) = -1.0 / ah;
      sys.C(i, i) = -1.0 / ah;
      sys.D(i, i) = -beta / ah;
      sys.E(i, i) = beta / ah;
    } else {
      double den = ah + beta;
      for (int j = 0; j < N; ++j) sys.B(i, j) = -beta / den;
      sys.B(i, i) = ah / den;
      sys.B(i, N) = -1.0 / den;
      sys.C(i, i) = -1.0 / den;
      sys.D(i, i) = -beta / den;
      sys.E(i, i) = beta / den;
    }
  }
  double sg = spec.dual_sign == DualSign::Ascent ? 1.0 : -1.0;
  for (int j = 0; j < N; ++j) sys.B(N, j) = sg * gb;
  sys.B(N, N) = 1.0;
  sys.D(N, N) = -gb;
  sys.E(N, N) = -sg * gb;
  return sys;
}

SwitchedSystem make_system(const MatrixXd& B, const MatrixXd& C, const MatrixXd& D, const SectorBounds& s,
                           Mode mode) {
  SwitchedSystem sys;
  sys.n = static_cast<int>(B.rows());
  sys.B = B;
  sys.C = C;
  sys.D = D;
  sys.E = MatrixXd::Zero(sys.n, sys.n);
  sys.K = MatrixXd::Zero(sys.n, sys.n);
  sys.sector = s;
  sys.mode = mode;
  return sys;
}

LinearSwitchedSystem make_linear(const MatrixXd& B, const MatrixXd& D, Mode mode) {
  LinearSwitchedSystem l;
  l.n = static_cast<int>(B.rows());
  l.Bfull = B;
  l.D = D;
  l.K = MatrixXd::Zero(l.n, l.n);
  l.mode = mode;
  return l;
}

MatrixXd SwitchedSystem::selector(int i) const {
  MatrixXd S = MatrixXd::Zero(n, n);
  S(i, i) = 1.0;
  return S;
}

namespace {
MatrixXd hold(const MatrixXd& M, int i, int n) {
  MatrixXd A = MatrixXd::Identity(n, n);
  A.row(i) = M.row(i);
  return A;
}
}  // namespace

MatrixXd SwitchedSystem::A_hat(int i) const {
  if (mode == Mode::Jacobi) return closed_loop();
  if (!hold_semantics) return selector(i) * closed_loop();
  return hold(closed_loop(), i, n);
}

MatrixXd SwitchedSystem::C_hat(int i) const {
  if (mode == Mode::Jacobi) return C;
  return selector(i) * C;
}

MatrixXd LinearSwitchedSystem::Bbar(int i) const {
  if (mode == Mode::Jacobi) return Bfull;
  return hold(Bfull, i, n);
}

LinearSwitchedSystem linearize(const SwitchedSystem& sys, const VectorXd& gains) {
  int N = sys.n - 1;
  if (gains.size() != N && gains.size() != sys.n)
    throw std::invalid_argument("linearize: one gain per block expected");
  VectorXd g = VectorXd::Zero(sys.n);
  g.head(N) = gains.head(N);
  if (gains.size() == sys.n && gains(N) != 0.0) throw std::invalid_argument("linearize: lambda gain must be 0");
  for (int i = 0; i < N; ++i) {
    double lo = sys.sector.mu_minus(i), hi = sys.sector.mu_plus(i);
    double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    if (g(i) < lo - tol || g(i) > hi + tol)
      throw std::invalid_argument("linearize: gain " + std::to_string(i) + " outside its sector");
  }
  LinearSwitchedSystem l;
  l.n = sys.n;
  l.Bfull = sys.closed_loop() + sys.C * g.asDiagonal();
  l.D = sys.D;
  l.K = sys.K;
  l.gains = g;
  l.mode = sys.mode;
  return l;
}

VectorXd nominal_gains(const ProblemSpec& spec, const SectorBounds& s) {
  int N = spec.n_blocks();
  VectorXd g(N);
  for (int i = 0; i < N; ++i) {
    const auto& o = spec.blocks[i].objective;
    if (o.kind == ObjectiveDesc::Kind::Quadratic)
      g(i) = std::clamp(2.0 * o.c / spec.blocks[i].norm_sq(), s.mu_minus(i), s.mu_plus(i));
    else
      g(i) = 0.5 * (s.mu_minus(i) + s.mu_plus(i));
  }
  return g;
}

SwitchedSystem apply_controller(const SwitchedSystem& sys, const MatrixXd& K) {
  if (K.rows() != sys.n || K.cols() != sys.n) throw std::invalid_argument("apply_controller: K must be (N+1)x(N+1)");
  SwitchedSystem out = sys;
  out.K = sys.K + K;
  return out;
}

LinearSwitchedSystem apply_controller(const LinearSwitchedSystem& sys, const MatrixXd& K) {
  if (K.rows() != sys.n || K.cols() != sys.n) throw std::invalid_argument("apply_controller: K must be (N+1)x(N+1)");
  LinearSwitchedSystem out = sys;
  out.Bfull = sys.Bfull + sys.D * K;
  out.K = sys.K + K;
  return out;
}

MatrixXd reduced_step(const SwitchedSystem& sys, int i, const MatrixXd& xi, const VectorXd& slopes,
                      const MatrixXd* affine) {
  VectorXd g = VectorXd::Zero(sys.n);
  g.head(std::min<int>(slopes.size(), sys.n - 1)) = slopes.head(std::min<int>(slopes.size(), sys.n - 1));
  MatrixXd M = sys.closed_loop() + sys.C * g.asDiagonal();
  if (sys.mode == Mode::Jacobi) {
    MatrixXd out = M * xi;
    if (affine) out += *affine;
    return out;
  }
  MatrixXd out = xi;
  out.row(i) = M.row(i) * xi;
  if (affine) out.row(i) += affine->row(i);
  return out;
}

MatrixXd offset_rows(const SwitchedSystem& sys, const VectorXd& q) {
  MatrixXd out(sys.n, q.size());
  for (int i = 0; i < sys.n; ++i) out.row(i) = sys.E(i, i) * q.transpose();
  return out;
}

double spectral_radius(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace admmcert
