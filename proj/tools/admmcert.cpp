#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "admmcert/io.hpp"

using namespace admmcert;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool emit_cert = false;
  std::optional<double> tol;
};

enum Exit { kOk = 0, kError = 1, kNegative = 2 };

Config need_config(const Globals& g) {
  if (g.config.empty()) throw std::invalid_argument("--config is required");
  Config c = load_config(g.config);
  if (g.tol) {
    if (!(*g.tol > 0.0 && *g.tol < 0.5)) throw std::invalid_argument("--tol must lie in (0, 0.5)");
    c.tol = *g.tol;
  }
  return c;
}

std::string out_path(const Globals& g, const std::string& file) { return (fs::path(g.out) / file).string(); }

void print_matrix(const MatrixXd& M) {
  for (int i = 0; i < M.rows(); ++i) {
    std::printf("  ");
    for (int k = 0; k < M.cols(); ++k) std::printf(" %10.5f", M(i, k));
    std::printf("\n");
  }
}

MinRateResult min_rate_for(const Config& c) {
  if (is_linear(c.method)) return min_rate(config_linear(c), c.method, c.tol, c.cert);
  return min_rate(config_system(c), c.method, c.tol, c.cert);
}

int cmd_certify(const Globals& g, std::optional<double> tau) {
  Config c = need_config(g);
  std::optional<RateCertificate> cert;
  bool numerical = false;
  if (tau) {
    if (!(*tau > 0.0 && *tau < 1.0)) throw std::invalid_argument("--tau must lie in (0, 1)");
    auto o = is_linear(c.method) ? certify(config_linear(c), *tau, c.method, c.cert)
                                 : certify(config_system(c), *tau, c.method, c.cert);
    cert = o.cert;
    numerical = o.status == lmi::Status::NumericalFailure;
  } else {
    auto r = min_rate_for(c);
    cert = r.cert;
    numerical = r.numerical_failure;
    if (r.monotonicity_warning) std::fprintf(stderr, "warning: feasibility was not monotone in tau\n");
  }
  if (!cert) {
    std::printf("method %s: no certificate for tau < 1%s\n", to_string(c.method),
                numerical ? " (solver reported numerical trouble)" : "");
    return kNegative;
  }
  std::printf("method %s: tau* = %.6f  chi = %.6g  margin = %.3g\n", to_string(c.method), cert->tau, cert->chi,
              cert->margin);
  if (g.emit_cert) {
    std::string p = out_path(g, "certificate.json");
    write_file(p, certificate_to_json(*cert, c.mode).dump(2) + "\n");
    std::printf("certificate written to %s\n", p.c_str());
  }
  return kOk;
}

int cmd_sweep(const Globals& g, int jobs, bool svg) {
  Config c = need_config(g);
  if (!c.grid) throw std::invalid_argument("config has no 'sweep' grid");
  std::vector<SweepRow> rows;
  for (double b : c.grid->beta)
    for (double ga : c.grid->gamma)
      for (double a : c.grid->alpha) rows.push_back({b, ga, a, std::nullopt});
  std::vector<std::string> errors(rows.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < rows.size();) {
      Config cc = c;
      cc.spec.beta = rows[k].beta;
      cc.spec.gamma = rows[k].gamma;
      std::fill(cc.spec.alpha.begin(), cc.spec.alpha.end(), rows[k].alpha);
      try {
        validate(cc.spec);
        rows[k].tau = min_rate_for(cc).tau;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min<int>(jobs, static_cast<int>(rows.size()));
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (std::size_t k = 0; k < rows.size(); ++k)
    if (!errors[k].empty())
      std::fprintf(stderr, "grid point beta=%g gamma=%g alpha=%g: %s\n", rows[k].beta, rows[k].gamma, rows[k].alpha,
                   errors[k].c_str());
  std::ostringstream os;
  write_sweep_csv(os, rows);
  std::string p = out_path(g, "sweep.csv");
  write_file(p, os.str());
  std::printf("%zu grid points, method %s, csv %s\n", rows.size(), to_string(c.method), p.c_str());
  if (svg) {
    std::string s = out_path(g, "sweep.svg");
    write_file(s, sweep_svg(rows));
    std::printf("plot %s\n", s.c_str());
  }
  return kOk;
}

std::vector<int> parse_sequence(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stoi(tok) - 1);
  return v;
}

int cmd_run(const Globals& g, const std::string& algo, const std::string& seq, const std::string& controller,
            std::optional<int> iters, bool random_order, double conv_tol) {
  Config c = need_config(g);
  if (!c.instance) throw std::invalid_argument("run needs an 'instance' in the config");
  RunOptions o;
  Mode mode = c.run.algo;
  if (!algo.empty()) mode = algo == "gs" ? Mode::GaussSeidel : Mode::Jacobi;
  o.iters = iters.value_or(c.run.iters);
  o.sequence = seq.empty() ? c.run.sequence : parse_sequence(seq);
  if (random_order || c.run.random_order) o.random_order_seed = child_seed(g.seed, 2);
  o.init = random_state(*c.instance, child_seed(g.seed, 1));
  if (!controller.empty()) {
    ControllerFile f = controller_from_json(json::parse(read_file(controller)));
    if (f.mode != mode) throw std::invalid_argument("controller was designed for the other update mode");
    Config cc = c;
    cc.mode = f.mode;
    auto rep = f.linear ? verify_controller(linearize(config_system(cc), f.gains), f.controller)
                        : verify_controller(config_system(cc), f.controller);
    if (!rep.ok) {
      std::fprintf(stderr, "controller certificate does not verify against this configuration\n");
      for (const auto& m : rep.failures) std::fprintf(stderr, "  %s\n", m.c_str());
      return kError;
    }
    o.K = f.controller.K;
    std::printf("controller verified (form %s, tau %.4f)\n", to_string(f.controller.source), f.controller.tau_design);
  }
  Trajectory t = mode == Mode::GaussSeidel ? run_gs(*c.instance, o) : run_pj(*c.instance, o);
  std::ostringstream os;
  write_trajectory_csv(os, t);
  std::string p = out_path(g, "trajectory.csv");
  write_file(p, os.str());
  RateEstimate r = empirical_rate(t);
  double rel = t.relative_error();
  bool diverged = t.status == RunStatus::Diverged || r.kind == RateEstimate::Kind::Diverged ||
                  (r.kind == RateEstimate::Kind::Rate && r.rho >= 1.0 && !(rel <= conv_tol));
  std::string status = diverged ? "diverged" : (o.iters == 0 ? "empty" : "converged");
  std::printf("status=%s iterations=%d final_residual=%.3e relative_error=%.3e rho_hat=%s seed=%llu csv=%s\n",
              status.c_str(), t.iterations(), t.primal_residual.back(), rel,
              r.kind == RateEstimate::Kind::Rate               ? std::to_string(r.rho).c_str()
              : r.kind == RateEstimate::Kind::ExactConvergence ? "exact"
              : r.kind == RateEstimate::Kind::Diverged         ? "inf"
                                                               : "n/a",
              static_cast<unsigned long long>(g.seed), p.c_str());
  return diverged ? kNegative : kOk;
}

int cmd_find_sequences(const Globals& g, double tau) {
  Config c = need_config(g);
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("--tau must lie in (0, 1)");
  if (c.mode != Mode::GaussSeidel) throw std::invalid_argument("find-sequences needs \"mode\": \"gs\"");
  if (is_linear(c.method)) throw std::invalid_argument("find-sequences uses thm1, thm2 or cor1");
  auto sys = config_system(c);
  PairTable table = build_pair_table(sys, tau, c.method, c.table_mode, c.cert);
  JointCheck joint = c.table_mode == TableMode::JointOnCycle ? joint_checker(sys, tau, c.method, c.cert) : nullptr;
  auto seqs = recursive_search(table, c.search, joint);
  std::printf("pair table at tau=%.4f (%s):\n     ", tau, to_string(c.method));
  for (int j = 0; j < table.n; ++j) std::printf(" %3d", j + 1);
  std::printf("\n");
  for (int i = 0; i < table.n; ++i) {
    std::printf("  %2d ", i + 1);
    for (int j = 0; j < table.n; ++j) std::printf(" %3s", table.at(i, j) ? "T" : ".");
    std::printf("\n");
  }
  json j;
  j["tau"] = tau;
  j["method"] = to_string(c.method);
  j["table"] = table.feasible;
  json list = json::array();
  for (const auto& s : seqs) {
    std::vector<int> one;
    for (int v : s) one.push_back(v + 1);
    list.push_back(one);
    std::printf("  sequence:");
    for (int v : one) std::printf(" %d", v);
    std::printf("\n");
  }
  j["sequences"] = list;
  std::string p = out_path(g, "sequences.json");
  write_file(p, j.dump(2) + "\n");
  std::printf("%zu convergent sequences, written to %s\n", seqs.size(), p.c_str());
  return seqs.empty() ? kNegative : kOk;
}

int cmd_synthesize(const Globals& g, double tau, const std::string& form_s, std::optional<double> min_gain) {
  Config c = need_config(g);
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("--tau must lie in (0, 1)");
  SynthForm form = form_s.empty() ? c.form : synth_form_from_string(form_s);
  bool gs = form == SynthForm::Thm3 || form == SynthForm::C3 || form == SynthForm::C4;
  c.mode = gs ? Mode::GaussSeidel : Mode::Jacobi;
  std::optional<MatrixXd> xi_star;
  if (c.instance) xi_star = reference_state(*c.instance);
  if (!c.instance) {
    if (c.spec.q_norm != 0.0)
      throw std::invalid_argument("inhomogeneous problem: synthesis needs an instance with a reference solution");
    xi_star = MatrixXd::Zero(c.spec.n_blocks() + 1, 1);
  }
  if (!xi_star) throw std::invalid_argument("inhomogeneous instance without x_star/lambda_star: synthesis refused");
  SynthesisOptions so;
  so.cert = c.cert;
  so.gain_bound = min_gain ? min_gain : c.gain_bound;
  bool linear = !(form == SynthForm::Thm3 || form == SynthForm::Cor2);
  SynthesisOutcome out;
  VectorXd gains;
  if (linear) {
    gains = config_gains(c);
    out = synthesize_linear(linearize(config_system(c), gains), tau, form, so);
  } else {
    auto sys = config_system(c);
    out = gs ? synthesize_gs(sys, tau, so) : synthesize_pj(sys, tau, so);
  }
  if (!out.controller) {
    std::printf("form %s at tau=%.4f: %s%s%s\n", to_string(form), tau, lmi::to_string(out.status),
                out.message.empty() ? "" : ": ", out.message.c_str());
    return out.status == lmi::Status::NumericalFailure ? kError : kNegative;
  }
  const Controller& k = *out.controller;
  std::printf("form %s at tau=%.4f: controller certified (closed loop %s, margin %.3g)\nK =\n", to_string(form), tau,
              to_string(k.certificate.method), k.certificate.margin);
  print_matrix(k.K);
  auto labels = reduced_labels(static_cast<int>(k.K.rows()));
  std::printf("equality constraints:\n");
  for (const auto& h : controller_constraints(k.K, *xi_star)) std::printf("  row %d: %s\n", h.row + 1,
                                                                         format_hyperplane(h, labels).c_str());
  std::string p = out_path(g, "controller.json");
  write_file(p, controller_to_json(k, c.mode, linear, gains).dump(2) + "\n");
  std::printf("controller written to %s\n", p.c_str());
  return kOk;
}

int cmd_gen_instance(const Globals& g, GenerateOptions o, double alpha, double beta, double gamma) {
  o.seed = g.seed;
  Instance in = generate_instance(o);
  in.alpha.assign(in.A.size(), alpha);
  in.beta = beta;
  in.gamma = gamma;
  if (o.kind == InstanceKind::L2)
    if (auto ref = quadratic_reference(in)) {
      in.x_star = ref->first;
      in.lambda_star = ref->second;
    }
  std::string p = out_path(g, "instance.json");
  write_file(p, instance_to_json(in).dump(1) + "\n");
  json cfg;
  cfg["mode"] = "pj";
  cfg["method"] = "c2";
  cfg["alpha"] = alpha;
  cfg["beta"] = beta;
  cfg["gamma"] = gamma;
  cfg["instance"] = {{"file", "instance.json"}};
  cfg["sweep"] = {{"beta", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
                  {"gamma", {gamma}},
                  {"alpha", {10, 50, 100, 150, 200}}};
  std::string pc = out_path(g, "instance_config.json");
  write_file(pc, cfg.dump(2) + "\n");
  std::printf("instance m=%d n=%d blocks=%d p=%d seed=%llu%s\n  %s\n  %s\n", o.m, o.n_total, o.n_blocks, o.p,
              static_cast<unsigned long long>(g.seed), in.x_star ? " (reference solved)" : "", p.c_str(), pc.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify, search and stabilize multi-block ADMM through switched-system LMIs"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "config JSON");
  app.add_option("--seed", g.seed, "RNG seed");
  app.add_option("--out", g.out, "output directory");
  app.add_flag("--emit-cert", g.emit_cert, "write the certificate JSON");
  app.add_option("--tol", g.tol, "tau bisection tolerance");

  auto* certify_c = app.add_subcommand("certify", "minimal certified rate tau*");
  std::optional<double> c_tau;
  certify_c->add_option("--tau", c_tau, "check a single tau instead of bisecting");

  auto* sweep_c = app.add_subcommand("sweep", "tau* over the config's beta/gamma/alpha grid");
  int jobs = 0;
  bool svg = false;
  sweep_c->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  sweep_c->add_flag("--svg", svg, "also write sweep.svg");

  auto* run_c = app.add_subcommand("run", "execute ADMM on the config's instance");
  std::string algo, seq, ctrl;
  std::optional<int> iters;
  bool random_order = false;
  double conv_tol = 1e-6;
  run_c->add_option("--algo", algo, "gs or pj")->check(CLI::IsMember({"gs", "pj"}));
  run_c->add_option("--sequence", seq, "GS block order, e.g. 2,1,3");
  run_c->add_option("--controller", ctrl, "controller JSON from synthesize");
  run_c->add_option("--iters", iters, "iterations")->check(CLI::NonNegativeNumber);
  run_c->add_flag("--random-order", random_order, "fresh GS order every sweep");
  run_c->add_option("--conv-tol", conv_tol, "relative error treated as converged");

  auto* find_c = app.add_subcommand("find-sequences", "convergent GS update sequences");
  double f_tau = 0.0;
  find_c->add_option("--tau", f_tau, "rate")->required();

  auto* syn_c = app.add_subcommand("synthesize", "design a parameter controller K");
  double s_tau = 0.0;
  std::string form;
  std::optional<double> min_gain;
  syn_c->add_option("--tau", s_tau, "design rate")->required();
  syn_c->add_option("--form", form, "thm3, cor2, c3, c4, c5 or c6");
  syn_c->add_option("--min-gain", min_gain, "bound N^T N < value*I (c4/c6)");

  auto* gen_c = app.add_subcommand("gen-instance", "random l2/l1 instance");
  GenerateOptions go;
  std::string kind = "l2";
  double ga = 10.0, gb = 0.7, gg = 1.0;
  gen_c->add_option("--kind", kind, "l2 or l1")->check(CLI::IsMember({"l2", "l1"}));
  gen_c->add_option("--m", go.m, "rows");
  gen_c->add_option("--n", go.n_total, "total columns");
  gen_c->add_option("--blocks", go.n_blocks, "blocks");
  gen_c->add_option("--p", go.p, "nonzeros in the planted solution");
  gen_c->add_option("--sigma", go.sigma, "noise standard deviation");
  gen_c->add_option("--alpha", ga, "alpha for the generated config");
  gen_c->add_option("--beta", gb, "beta for the generated config");
  gen_c->add_option("--gamma", gg, "gamma for the generated config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kError;
  }
  try {
    if (*certify_c) return cmd_certify(g, c_tau);
    if (*sweep_c) return cmd_sweep(g, jobs, svg);
    if (*run_c) return cmd_run(g, algo, seq, ctrl, iters, random_order, conv_tol);
    if (*find_c) return cmd_find_sequences(g, f_tau);
    if (*syn_c) return cmd_synthesize(g, s_tau, form, min_gain);
    if (*gen_c) {
      go.kind = kind == "l1" ? InstanceKind::L1 : InstanceKind::L2;
      return cmd_gen_instance(g, go, ga, gb, gg);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}
