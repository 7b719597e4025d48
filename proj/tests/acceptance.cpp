// Acceptance checks; one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "admmcert/certification.hpp"
#include "admmcert/runtime.hpp"
#include "admmcert/sequence_search.hpp"
#include "admmcert/synthesis.hpp"
#include "fixtures.hpp"

using namespace admmcert;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---- 1
Outcome divergence() {
  auto in = fixtures::counter_instance(1, 1, 1);
  RunOptions o;
  o.iters = 200;
  o.init = random_state(in, child_seed(17, 0));
  auto t = run_pj(in, o);
  double ratio = 0.0;
  int hit = -1;
  for (int k = 0; k < static_cast<int>(t.state_norm.size()); ++k) {
    double r = t.state_norm[k] / t.state_norm[0];
    ratio = std::max(ratio, std::isfinite(r) ? r : INFINITY);
    if (hit < 0 && r > 1e3) hit = k;
  }
  return {hit >= 0 && hit <= 200, fmt("|xi_k|/|xi_0| > 1e3 at k=%d (max ratio %.3g)", hit, ratio)};
}

// ---- 2
Outcome stabilization() {
  auto in = fixtures::counter_instance(1, 1, 1);
  auto spec = in.spec();
  auto sys = build_system(spec, Mode::Jacobi);
  auto lin = linearize(sys, nominal_gains(spec, sys.sector));
  auto out = synthesize_linear(lin, 0.9, SynthForm::C6);
  Outcome r;
  if (!out.controller) return {false, "C6 synthesis returned no controller: " + out.message};
  RunOptions o;
  o.iters = 400;
  o.K = out.controller->K;
  o.init = random_state(in, child_seed(17, 1));
  auto t = run_pj(in, o);
  double rel = 1.0;
  for (int k = 0; k <= t.iterations(); ++k) rel = std::min(rel, t.distance[k] / t.distance[0]);
  auto est = empirical_rate(t);
  bool run_ok = t.status == RunStatus::Completed && rel < 1e-6 &&
                (est.kind == RateEstimate::Kind::ExactConvergence ||
                 (est.kind == RateEstimate::Kind::Rate && est.rho <= 0.91));
  // printed K on (x1, x2, x3, lambda1..3), injected through the input matrix diag(-beta/alpha_hat_i, -gamma*beta)
  MatrixXd K(6, 6);
  K << -0.65, 0.04, 0.01, 0.10, -0.20, -0.00,  //
      0.04, -0.72, 0.02, -0.00, -0.20, 0.20,   //
      0.01, 0.02, -0.88, 0.10, -0.00, 0.10,    //
      0.10, -0.00, 0.10, -1.00, 0.00, 0.00,    //
      -0.20, -0.20, 0.00, 0.00, -1.00, 0.00,   //
      -0.00, 0.20, 0.10, -0.00, -0.00, -1.00;
  MatrixXd M = linear_iteration_map(in, Mode::Jacobi);
  VectorXd d(6);
  for (int i = 0; i < 3; ++i) d(i) = -in.beta / spec.alpha_hat(i);
  d.tail(3).setConstant(-in.gamma * in.beta);
  double rho_printed = spectral_radius(M + d.asDiagonal() * K);
  bool printed_ok = rho_printed < 0.9 + 1e-6;
  r.pass = run_ok && printed_ok;
  r.detail = fmt("C6 controller: min rel err %.2e, rate %.4f [%s]; printed K closed loop rho = %.4f [%s]", rel,
                 est.rho, run_ok ? "ok" : "bad", rho_printed, printed_ok ? "ok" : "not < 0.9");
  return r;
}

// ---- 3
MatrixXd normal_matrix(int n, double rho, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> nd;
  MatrixXd Dm = MatrixXd::Zero(n, n);
  int i = 0;
  bool first = true;
  while (i < n) {
    double r = first ? rho : rho * (0.2 + 0.8 * u(rng));
    first = false;
    if (i + 1 < n && u(rng) < 0.5) {
      double th = M_PI * u(rng);
      Dm(i, i) = r * std::cos(th);
      Dm(i, i + 1) = -r * std::sin(th);
      Dm(i + 1, i) = r * std::sin(th);
      Dm(i + 1, i + 1) = r * std::cos(th);
      i += 2;
    } else {
      Dm(i, i) = u(rng) < 0.5 ? -r : r;
      ++i;
    }
  }
  MatrixXd G(n, n);
  for (int k = 0; k < n * n; ++k) G.data()[k] = nd(rng);
  Eigen::HouseholderQR<MatrixXd> qr(G);
  MatrixXd Q = qr.householderQ();
  return Q * Dm * Q.transpose();
}

Outcome spectral_oracle() {
  std::mt19937_64 rng(child_seed(31, 0));
  std::uniform_int_distribution<int> dim(2, 8);
  std::uniform_real_distribution<double> ur(0.05, 0.97);
  const double tol = 1e-3;
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    int n = dim(rng);
    MatrixXd B = normal_matrix(n, ur(rng), rng);
    double rho = spectral_radius(B);
    auto lin = make_linear(B, MatrixXd::Zero(n, n), Mode::Jacobi);
    auto mr = min_rate(lin, Method::LinC2, tol);
    double err = mr.tau ? std::abs(*mr.tau - std::max(rho, tol)) : INFINITY;
    worst = std::max(worst, err);
    if (!(err <= 2 * tol)) ++bad;
  }
  return {bad == 0, fmt("100 normal systems, %d mismatches, worst |tau* - rho| = %.2e (limit %.0e)", bad, worst,
                        2 * tol)};
}

// ---- 4 and 5 share a corpus
struct Case {
  SwitchedSystem sys;
  Mode mode;
};

std::vector<Case> corpus() {
  std::vector<Case> cs;
  for (int k = 0; k < 50; ++k) {
    std::mt19937_64 rng(child_seed(4242, k));
    std::uniform_real_distribution<double> u(0, 1);
    Mode mode = k % 2 ? Mode::GaussSeidel : Mode::Jacobi;
    int N = 1 + static_cast<int>(u(rng) * 3);
    ProblemSpec s;
    s.beta = 0.3 + 1.2 * u(rng);
    s.gamma = 0.5 + 0.5 * u(rng);
    for (int i = 0; i < N; ++i) {
      BlockSpec b;
      b.sigma_max = 0.8 + 0.7 * u(rng);
      b.sigma_min = b.sigma_max * (u(rng) < 0.5 ? 1.0 : 0.8 + 0.2 * u(rng));
      double lo = 0.05 + 0.45 * u(rng);
      double w = (mode == Mode::GaussSeidel ? 0.1 : 0.3) * u(rng);
      b.objective = ObjectiveDesc::sector(lo, lo + w);
      s.blocks.push_back(b);
      s.alpha.push_back((N + 1) * s.beta * b.sigma_max * b.sigma_max * (1.2 + 1.3 * u(rng)));
    }
    cs.push_back({build_system(s, mode), mode});
  }
  return cs;
}

Outcome envelope() {
  auto cs = corpus();
  int issued = 0, violations = 0, trajectories = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const auto& sys = cs[k].sys;
    auto mr = min_rate(sys, Method::Thm1);
    if (!mr.cert) continue;
    ++issued;
    const auto& cert = *mr.cert;
    std::mt19937_64 rng(child_seed(99, k));
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u(0, 1);
    int n = sys.n, N = n - 1, subs = sys.subsystem_count();
    for (int traj = 0; traj < 100; ++traj, ++trajectories) {
      MatrixXd xi(n, 1);
      for (int i = 0; i < n; ++i) xi(i, 0) = nd(rng);
      double x0 = xi.norm();
      int phase = static_cast<int>(u(rng) * subs) % subs;
      for (int t = 1; t <= 500; ++t) {
        VectorXd slopes(N);
        for (int i = 0; i < N; ++i) {
          double lo = sys.sector.mu_minus(i), hi = sys.sector.mu_plus(i), v = u(rng);
          slopes(i) = v < 0.15 ? lo : v > 0.85 ? hi : lo + (hi - lo) * u(rng);
        }
        int active = (phase + t - 1) % subs;
        xi = reduced_step(sys, active, xi, slopes);
        double bound = cert.chi * std::pow(cert.tau, t) * x0 * (1 + 1e-6);
        double ratio = xi.norm() / bound;
        worst = std::max(worst, ratio);
        if (ratio > 1.0) {
          ++violations;
          break;
        }
      }
    }
  }
  bool pass = violations == 0 && issued > 0;
  return {pass, fmt("%d certificates, %d trajectories, %d violations, max |xi_t|/bound = %.3f", issued, trajectories,
                    violations, worst)};
}

Outcome orderings() {
  auto cs = corpus();
  int checks = 0, counter = 0, feasible_cor1 = 0, feasible_thm1 = 0;
  std::string first;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    const auto& sys = cs[k].sys;
    std::vector<double> taus{0.9, 0.97, 0.995};
    auto mr = min_rate(sys, Method::Thm1);
    if (mr.tau && *mr.tau + 2e-3 < 1.0) taus.push_back(*mr.tau + 2e-3);
    for (double tau : taus) {
      bool c1 = certify(sys, tau, Method::Cor1).cert.has_value();
      bool t1 = certify(sys, tau, Method::Thm1).cert.has_value();
      bool t2 = certify(sys, tau, Method::Thm2).cert.has_value();
      feasible_cor1 += c1;
      feasible_thm1 += t1;
      ++checks;
      if ((c1 && !t1) || (t1 && !t2)) {
        ++counter;
        if (first.empty()) first = fmt(" (first: case %zu tau %.4f: cor1=%d thm1=%d thm2=%d)", k, tau, c1, t1, t2);
      }
    }
  }
  return {counter == 0, fmt("%d (case, tau) checks, cor1 feasible %d, thm1 feasible %d, %d counterexamples%s", checks,
                            feasible_cor1, feasible_thm1, counter, first.c_str())};
}

// ---- 6
Outcome experiment2() {
  GenerateOptions g;  // m=200, n_total=100, 10 blocks, p=100, sigma=1e-6
  g.seed = 1;
  Instance in = generate_instance(g);
  in.beta = 0.7;
  in.gamma = 1.0;
  std::vector<double> alphas{10, 50, 100, 150, 200}, taus;
  for (double a : alphas) {
    in.alpha.assign(in.A.size(), a);
    auto spec = in.spec();
    auto lin = linearize(build_system(spec, Mode::Jacobi), nominal_gains(spec, build_sector_bounds(spec)));
    auto mr = min_rate(lin, Method::LinC2, 1e-4);
    taus.push_back(mr.tau.value_or(INFINITY));
  }
  bool range = taus[0] >= 0.88 && taus[0] <= 0.98;
  bool monotone = true;
  for (std::size_t k = 1; k < taus.size(); ++k) monotone = monotone && taus[k] <= taus[k - 1] + 1e-4;
  std::string list;
  for (std::size_t k = 0; k < taus.size(); ++k) list += fmt("%s%g:%.4f", k ? " " : "", alphas[k], taus[k]);
  return {range && monotone, fmt("tau*(alpha=10) = %.4f in [0.88, 0.98]: %s; non-increasing in alpha: %s [%s]",
                                 taus[0], range ? "yes" : "no", monotone ? "yes" : "no", list.c_str())};
}

// ---- 7
std::vector<Sequence> filtered(const PairTable& T, const SearchOptions& o) {
  int n = T.n;
  std::vector<Sequence> out;
  std::vector<int> s(n, 0);
  std::function<void(int)> fill = [&](int pos) {
    if (pos == n) {
      if (o.repetition == Repetition::PermutationOnly) {
        std::vector<int> t = s;
        std::sort(t.begin(), t.end());
        if (std::unique(t.begin(), t.end()) != t.end()) return;
      }
      for (int r = 1; r < n; ++r)
        for (int i = (o.legality == Legality::Consecutive ? r - 1 : 0); i < r; ++i)
          if (!T.at(s[i], s[r])) return;
      if (!T.at(s[n - 1], s[0])) return;
      out.push_back(s);
      return;
    }
    for (int v = 0; v < n; ++v) {
      s[pos] = v;
      fill(pos + 1);
    }
  };
  fill(0);
  std::sort(out.begin(), out.end());
  return out;
}

Outcome search_equivalence() {
  int tables = 0, mismatches = 0;
  std::mt19937_64 rng(child_seed(7, 0));
  for (int n = 1; n <= 4; ++n) {
    long total = 1L << (n * n);
    long count = n == 4 ? 512 : total;
    for (long c = 0; c < count; ++c) {
      std::uint64_t bits = n == 4 ? rng() & 0xffff : static_cast<std::uint64_t>(c);
      PairTable T;
      T.n = n;
      T.feasible.assign(n, std::vector<bool>(n, false));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) T.feasible[i][j] = (bits >> (i * n + j)) & 1;
      ++tables;
      for (Legality l : {Legality::Consecutive, Legality::AllPrevious})
        for (Repetition r : {Repetition::PermutationOnly, Repetition::Allowed}) {
          SearchOptions o{l, r};
          if (recursive_search(T, o) != filtered(T, o)) ++mismatches;
        }
    }
  }
  return {mismatches == 0, fmt("%d tables x 4 option sets, %d mismatches", tables, mismatches)};
}

// ---- 8
Outcome prox_oracles() {
  std::mt19937_64 rng(child_seed(8, 0));
  std::uniform_real_distribution<double> ux(-3, 3), ur(0, 2), uc(0, 3), uw(0.05, 4);
  double worst_l1 = 0.0, worst_q = 0.0;
  for (int k = 0; k < 1000; ++k) {
    double x = ux(rng), r = ur(rng);
    double best = 0.0, bv = INFINITY;
    for (int s = -40000; s <= 40000; ++s) {
      double y = s * 1e-4;
      double v = r * std::abs(y) + 0.5 * (y - x) * (y - x);
      if (v < bv) bv = v, best = y;
    }
    worst_l1 = std::max(worst_l1, std::abs(prox_l1(r, VectorXd::Constant(1, x))(0) - best));
    double c = uc(rng), w = uw(rng);
    // stationarity of c y^2 + (w/2)(y - x)^2
    double y = w * x / (2 * c + w);
    worst_q = std::max(worst_q, std::abs(prox_quadratic(c, VectorXd::Constant(1, x), w)(0) - y));
  }
  bool pass = worst_l1 <= 1e-4 && worst_q <= 1e-4;
  return {pass, fmt("1000 inputs: soft threshold max err %.2e, quadratic prox max err %.2e", worst_l1, worst_q)};
}

// ---- 9
Outcome reduced_full() {
  double worst = 0.0;
  int runs = 0;
  for (int seed = 0; seed < 20; ++seed)
    for (Mode mode : {Mode::GaussSeidel, Mode::Jacobi}) {
      auto in = fixtures::isotropic_instance(2 + seed % 3, 1 + seed % 3, child_seed(9, seed));
      auto spec = in.spec();
      auto sys = build_system(spec, mode);
      VectorXd slopes(in.n_blocks());
      for (int i = 0; i < in.n_blocks(); ++i) slopes(i) = 2 * in.objectives[i].c / spec.blocks[i].norm_sq();
      MatrixXd affine = offset_rows(sys, in.q);
      RunOptions o;
      o.iters = 1;
      o.init = random_state(in, child_seed(10, seed));
      MatrixXd xi = reduced_state(in, *o.init);
      for (int k = 0; k < 100; ++k) {
        auto t = mode == Mode::Jacobi ? run_pj(in, o) : run_gs(in, o);
        if (mode == Mode::Jacobi)
          xi = reduced_step(sys, 0, xi, slopes, &affine);
        else
          for (int i = 0; i <= in.n_blocks(); ++i) xi = reduced_step(sys, i, xi, slopes, &affine);
        worst = std::max(worst, (xi - reduced_state(in, t.final_state)).norm());
        o.init = t.final_state;
      }
      ++runs;
    }
  return {worst <= 1e-10, fmt("%d runs x 100 iterations, max |xi_reduced - xi_full| = %.2e", runs, worst)};
}

struct Criterion {
  int id;
  const char* name;
  double budget;
  Outcome (*fn)();
};

const Criterion kCriteria[] = {
    {1, "counter-example divergence", 1.0, divergence},
    {2, "counter-example stabilization", 10.0, stabilization},
    {3, "spectral-radius oracle", 60.0, spectral_oracle},
    {4, "certificate envelope soundness", 300.0, envelope},
    {5, "finsler/cqlf orderings", 300.0, orderings},
    {6, "experiment-2 rate", 120.0, experiment2},
    {7, "recursive search equivalence", 30.0, search_equivalence},
    {8, "prox oracles", 5.0, prox_oracles},
    {9, "reduced/full consistency", 30.0, reduced_full},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (!std::strcmp(argv[i], "--criterion") && i + 1 < argc) only = std::atoi(argv[++i]);
  bool all = true;
  for (const auto& c : kCriteria) {
    if (only && c.id != only) continue;
    auto t0 = Clock::now();
    Outcome o = c.fn();
    double dt = seconds_since(t0);
    bool in_time = dt <= c.budget;
    bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("CRITERION %d %s: %s | %s | %.2fs (budget %.0fs%s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), dt, c.budget, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
