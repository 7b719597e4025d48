#include "admmcert/runtime.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace admmcert {

using Kind = ObjectiveDesc::Kind;

void Instance::validate() const {
  if (A.empty()) throw std::invalid_argument("instance: no blocks");
  if (objectives.size() != A.size()) throw std::invalid_argument("instance: objectives/blocks size mismatch");
  if (alpha.size() != A.size()) throw std::invalid_argument("instance: alpha/blocks size mismatch");
  for (std::size_t i = 0; i < A.size(); ++i)
    if (A[i].rows() != q.size())
      throw std::invalid_argument("instance: block " + std::to_string(i) + " has " + std::to_string(A[i].rows()) +
                                  " rows, q has " + std::to_string(q.size()));
  if (!(beta > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("instance: beta and gamma must be positive");
  if (x_star) {
    if (x_star->size() != A.size()) throw std::invalid_argument("instance: x_star block count");
    for (std::size_t i = 0; i < A.size(); ++i)
      if ((*x_star)[i].size() != A[i].cols()) throw std::invalid_argument("instance: x_star block size");
  }
  if (lambda_star && lambda_star->size() != q.size()) throw std::invalid_argument("instance: lambda_star size");
}

ProblemSpec Instance::spec() const {
  validate();
  ProblemSpec s;
  for (std::size_t i = 0; i < A.size(); ++i) {
    Eigen::JacobiSVD<MatrixXd> svd(A[i]);
    const VectorXd& sv = svd.singularValues();
    BlockSpec b;
    b.sigma_max = sv(0);
    b.sigma_min = sv(sv.size() - 1);
    b.objective = objectives[i];
    s.blocks.push_back(b);
  }
  s.beta = beta;
  s.gamma = gamma;
  s.alpha = alpha;
  s.variant = variant;
  s.dual_sign = dual_sign;
  s.q = q;
  s.q_norm = q.norm();
  return s;
}

std::optional<std::pair<std::vector<VectorXd>, VectorXd>> quadratic_reference(const Instance& inst, double tol) {
  inst.validate();
  int N = inst.n_blocks(), m = inst.m(), nx = 0;
  for (int i = 0; i < N; ++i) {
    if (inst.objectives[i].kind != Kind::Quadratic) return std::nullopt;
    nx += static_cast<int>(inst.A[i].cols());
  }
  MatrixXd KKT = MatrixXd::Zero(nx + m, nx + m);
  VectorXd rhs = VectorXd::Zero(nx + m);
  int off = 0;
  for (int i = 0; i < N; ++i) {
    int ni = static_cast<int>(inst.A[i].cols());
    KKT.block(off, off, ni, ni) = 2.0 * inst.objectives[i].c * MatrixXd::Identity(ni, ni);
    KKT.block(off, nx, ni, m) = inst.A[i].transpose();
    KKT.block(nx, off, m, ni) = inst.A[i];
    off += ni;
  }
  rhs.tail(m) = inst.q;
  VectorXd z = KKT.completeOrthogonalDecomposition().solve(rhs);
  if ((KKT * z - rhs).norm() > tol * std::max(1.0, rhs.norm())) return std::nullopt;
  std::vector<VectorXd> x;
  off = 0;
  for (int i = 0; i < N; ++i) {
    int ni = static_cast<int>(inst.A[i].cols());
    x.push_back(z.segment(off, ni));
    off += ni;
  }
  return std::make_pair(x, VectorXd(z.tail(m)));
}

AdmmState zero_state(const Instance& inst) {
  AdmmState s;
  for (const auto& A : inst.A) s.x.push_back(VectorXd::Zero(A.cols()));
  s.lambda = VectorXd::Zero(inst.m());
  return s;
}

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

AdmmState random_state(const Instance& inst, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  AdmmState s = zero_state(inst);
  double sq = 0.0;
  for (auto& x : s.x)
    for (int k = 0; k < x.size(); ++k) sq += (x(k) = nd(rng)) * x(k);
  for (int k = 0; k < s.lambda.size(); ++k) sq += (s.lambda(k) = nd(rng)) * s.lambda(k);
  double f = scale / std::sqrt(sq);
  for (auto& x : s.x) x *= f;
  s.lambda *= f;
  return s;
}

MatrixXd reduced_state(const Instance& inst, const AdmmState& s) {
  int N = inst.n_blocks();
  MatrixXd xi(N + 1, inst.m());
  for (int i = 0; i < N; ++i) xi.row(i) = (inst.A[i] * s.x[i]).transpose();
  xi.row(N) = s.lambda.transpose();
  return xi;
}

std::optional<MatrixXd> reference_state(const Instance& inst) {
  if (inst.has_reference()) return reduced_state(inst, AdmmState{*inst.x_star, *inst.lambda_star});
  if (inst.q.norm() == 0.0) return MatrixXd(MatrixXd::Zero(inst.n_blocks() + 1, inst.m()));
  return std::nullopt;
}

VectorXd prox_quadratic(double c, const VectorXd& center, double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("prox_quadratic: weight must be positive");
  return (weight / (2.0 * c + weight)) * center;
}

VectorXd prox_l1(double r, const VectorXd& center) {
  if (r < 0.0) throw std::invalid_argument("prox_l1: r must be nonnegative");
  return center.unaryExpr([r](double v) { return std::copysign(std::max(std::abs(v) - r, 0.0), v); });
}

const char* to_string(RunStatus s) { return s == RunStatus::Diverged ? "diverged" : "completed"; }

double Trajectory::relative_error() const {
  if (distance.empty() || !(distance.front() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return distance.back() / distance.front();
}

namespace {

class Runner {
 public:
  Runner(const Instance& inst, const RunOptions& o) : inst_(inst), o_(o) {
    inst.validate();
    N_ = inst.n_blocks();
    sg_ = inst.dual_sign == DualSign::Ascent ? 1.0 : -1.0;
    ref_ = reference_state(inst);
    if (o.K) {
      if (o.K->rows() != N_ + 1 || o.K->cols() != N_ + 1)
        throw std::invalid_argument("run: controller must be " + std::to_string(N_ + 1) + "x" +
                                    std::to_string(N_ + 1));
      if (!ref_) throw std::invalid_argument("run: controller on an inhomogeneous problem needs a reference solution");
    }
    for (int i = 0; i < N_; ++i) {
      const auto& ob = inst.objectives[i];
      if (ob.kind == Kind::SectorOnly)
        throw std::invalid_argument("run: block " + std::to_string(i) + " has a sector-only objective");
      if (inst.alpha[i] <= 0.0) throw std::invalid_argument("run: alpha must be positive");
      if (inst.variant == Variant::ProxIdentity) {
        if (ob.kind == Kind::L1) throw std::invalid_argument("run: identity prox with an l1 block has no closed form");
        const MatrixXd& A = inst.A[i];
        MatrixXd H = inst.beta * A.transpose() * A + inst.alpha[i] * MatrixXd::Identity(A.cols(), A.cols());
        ldlt_.emplace_back(H);
      }
    }
    s_ = o.init ? *o.init : zero_state(inst);
    if (static_cast<int>(s_.x.size()) != N_) throw std::invalid_argument("run: initial state block count");
    if (s_.lambda.size() != inst.m()) throw std::invalid_argument("run: initial lambda size");
    for (int i = 0; i < N_; ++i)
      if (s_.x[i].size() != inst.A[i].cols()) throw std::invalid_argument("run: initial state block size");
  }

  VectorXd residual() const {
    VectorXd r = -inst_.q;
    for (int i = 0; i < N_; ++i) r += inst_.A[i] * s_.x[i];
    return r;
  }

  // n x m feedback, zero without a controller
  MatrixXd feedback() const {
    if (!o_.K) return MatrixXd::Zero(N_ + 1, inst_.m());
    return *o_.K * (reduced_state(inst_, s_) - *ref_);
  }

  VectorXd block_update(int i, const AdmmState& from, const VectorXd& r, const VectorXd& u) const {
    const MatrixXd& A = inst_.A[i];
    const auto& ob = inst_.objectives[i];
    double a = inst_.alpha[i], b = inst_.beta;
    const VectorXd& x = from.x[i];
    VectorXd w = b * r + from.lambda + b * u;
    if (inst_.variant == Variant::ProxIdentity) {
      VectorXd rhs = a * x - 2.0 * ob.c * x - A.transpose() * (w - b * (A * x));
      return ldlt_[i].solve(rhs);
    }
    VectorXd center = x - A.transpose() * w / a;
    if (ob.kind == Kind::L1) return prox_l1(ob.r / a, center);
    if (o_.exact_quadratic_prox) return prox_quadratic(ob.c, center, a);
    return x - (2.0 * ob.c * x + A.transpose() * w) / a;
  }

  void lambda_update(const VectorXd& r, const VectorXd& u) {
    double gb = inst_.gamma * inst_.beta;
    s_.lambda += sg_ * gb * r - gb * u;
  }

  void gs_sweep(const std::vector<int>& order) {
    for (int i : order) {
      MatrixXd u = feedback();
      s_.x[i] = block_update(i, s_, residual(), u.row(i).transpose());
    }
    MatrixXd u = feedback();
    lambda_update(residual(), u.row(N_).transpose());
  }

  void pj_sweep() {
    MatrixXd u = feedback();
    VectorXd r = residual();
    AdmmState old = s_;
    for (int i = 0; i < N_; ++i) s_.x[i] = block_update(i, old, r, u.row(i).transpose());
    lambda_update(r, u.row(N_).transpose());
  }

  void record(Trajectory& t) const {
    MatrixXd xi = reduced_state(inst_, s_);
    t.primal_residual.push_back(residual().norm());
    t.state_norm.push_back(xi.norm());
    t.distance.push_back(ref_ ? (xi - *ref_).norm() : std::numeric_limits<double>::quiet_NaN());
    if (o_.record_states) t.states.push_back(xi);
  }

  bool blown(const Trajectory& t) const {
    double v = t.state_norm.back();
    return !std::isfinite(v) || v > o_.divergence_guard;
  }

  Trajectory run(bool gs) {
    if (o_.iters < 0) throw std::invalid_argument("run: iters must be nonnegative");
    std::vector<int> order = o_.sequence;
    if (order.empty()) {
      order.resize(N_);
      std::iota(order.begin(), order.end(), 0);
    }
    if (gs) {
      std::vector<int> sorted = order;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < N_; ++i)
        if (static_cast<int>(sorted.size()) != N_ || sorted[i] != i)
          throw std::invalid_argument("run_gs: sequence must be a permutation of the blocks");
    }
    std::optional<std::mt19937_64> rng;
    if (gs && o_.random_order_seed) rng.emplace(*o_.random_order_seed);
    Trajectory t;
    record(t);
    for (int k = 1; k <= o_.iters; ++k) {
      if (gs) {
        if (rng) std::shuffle(order.begin(), order.end(), *rng);
        gs_sweep(order);
        t.sequence_used.push_back(order);
      } else {
        pj_sweep();
      }
      record(t);
      if (blown(t)) {
        t.status = RunStatus::Diverged;
        t.diverged_at = k;
        break;
      }
    }
    t.final_state = s_;
    return t;
  }

 private:
  const Instance& inst_;
  const RunOptions& o_;
  int N_ = 0;
  double sg_ = 1.0;
  std::optional<MatrixXd> ref_;
  std::vector<Eigen::LDLT<MatrixXd>> ldlt_;
  AdmmState s_;
};

}  // namespace

Trajectory run_gs(const Instance& inst, const RunOptions& opts) { return Runner(inst, opts).run(true); }
Trajectory run_pj(const Instance& inst, const RunOptions& opts) { return Runner(inst, opts).run(false); }

RateEstimate empirical_rate(const std::vector<double>& d, int window, double floor) {
  RateEstimate est;
  if (d.empty()) return est;
  for (double v : d)
    if (!std::isfinite(v)) {
      est.kind = RateEstimate::Kind::Diverged;
      est.rho = INFINITY;
      return est;
    }
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
    est.kind = RateEstimate::Kind::ExactConvergence;
    est.rho = 0.0;
    return est;
  }
  double d0 = d.front() > 0.0 ? d.front() : *std::max_element(d.begin(), d.end());
  // last index still above the noise floor
  int end = static_cast<int>(d.size()) - 1;
  while (end >= 0 && !(d[end] > floor * d0)) --end;
  if (end < 1) {
    est.kind = d.size() > 1 ? RateEstimate::Kind::ExactConvergence : RateEstimate::Kind::TooShort;
    est.rho = d.size() > 1 ? 0.0 : est.rho;
    return est;
  }
  int begin = std::max(0, end - window + 1);
  while (begin < end && !(d[begin] > 0.0)) ++begin;
  int n = end - begin + 1;
  if (n < 2) return est;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int t = begin; t <= end; ++t) {
    double y = std::log(d[t]);
    st += t;
    sy += y;
    stt += double(t) * t;
    sty += t * y;
  }
  double slope = (n * sty - st * sy) / (n * stt - st * st);
  est.kind = RateEstimate::Kind::Rate;
  est.rho = std::exp(slope);
  if (est.rho > 1.0 && d.back() > 1e3 * d0) est.kind = RateEstimate::Kind::Diverged;
  return est;
}

RateEstimate empirical_rate(const Trajectory& t, int window) {
  if (t.status == RunStatus::Diverged) return {RateEstimate::Kind::Diverged, INFINITY};
  const auto& series = std::isnan(t.distance.empty() ? 0.0 : t.distance.front()) ? t.primal_residual : t.distance;
  return empirical_rate(series, window);
}

Instance generate_instance(const GenerateOptions& g) {
  if (g.m <= 0 || g.n_total <= 0 || g.n_blocks <= 0 || g.n_blocks > g.n_total)
    throw std::invalid_argument("generate_instance: dimensions must be positive with n_blocks <= n_total");
  if (g.p < 0 || g.p > g.n_total) throw std::invalid_argument("generate_instance: p must lie in [0, n_total]");
  std::mt19937_64 ra(child_seed(g.seed, 0)), rx(child_seed(g.seed, 1)), rn(child_seed(g.seed, 2));
  std::normal_distribution<double> nd;
  MatrixXd A(g.m, g.n_total);
  for (int j = 0; j < g.n_total; ++j) {
    for (int i = 0; i < g.m; ++i) A(i, j) = nd(ra);
    A.col(j) /= A.col(j).norm();
  }
  std::vector<int> idx(g.n_total);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rx);
  VectorXd xs = VectorXd::Zero(g.n_total);
  for (int k = 0; k < g.p; ++k) xs(idx[k]) = nd(rx);
  VectorXd delta(g.m);
  for (int i = 0; i < g.m; ++i) delta(i) = g.sigma * nd(rn);

  Instance inst;
  inst.q = A * xs + delta;
  inst.planted = xs;
  int base = g.n_total / g.n_blocks, extra = g.n_total % g.n_blocks, off = 0;
  for (int b = 0; b < g.n_blocks; ++b) {
    int nb = base + (b < extra ? 1 : 0);
    inst.A.push_back(A.middleCols(off, nb));
    inst.objectives.push_back(g.kind == InstanceKind::L2 ? ObjectiveDesc::quadratic(0.5, nb)
                                                         : ObjectiveDesc::l1(1.0, nb));
    inst.alpha.push_back(10.0);
    off += nb;
  }
  return inst;
}

MatrixXd linear_iteration_map(const Instance& inst, Mode mode, const std::optional<MatrixXd>& K) {
  Instance h = inst;
  h.q = VectorXd::Zero(inst.m());
  h.x_star.reset();
  h.lambda_star.reset();
  for (const auto& ob : h.objectives)
    if (ob.kind != Kind::Quadratic) throw std::invalid_argument("linear_iteration_map: quadratic blocks only");
  int N = h.n_blocks(), dim = h.m();
  for (const auto& A : h.A) dim += static_cast<int>(A.cols());
  MatrixXd M(dim, dim);
  RunOptions o;
  o.iters = 1;
  o.K = K;
  o.divergence_guard = INFINITY;
  for (int k = 0; k < dim; ++k) {
    AdmmState s = zero_state(h);
    int off = 0;
    for (int i = 0; i < N; ++i) {
      int ni = static_cast<int>(h.A[i].cols());
      if (k >= off && k < off + ni) s.x[i](k - off) = 1.0;
      off += ni;
    }
    if (k >= off) s.lambda(k - off) = 1.0;
    o.init = s;
    Trajectory t = mode == Mode::GaussSeidel ? run_gs(h, o) : run_pj(h, o);
    VectorXd col(dim);
    off = 0;
    for (int i = 0; i < N; ++i) {
      col.segment(off, h.A[i].cols()) = t.final_state.x[i];
      off += static_cast<int>(h.A[i].cols());
    }
    col.tail(h.m()) = t.final_state.lambda;
    M.col(k) = col;
  }
  return M;
}

}  // namespace admmcert
