#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "admmcert/system.hpp"

namespace admmcert {

struct Instance {
  std::vector<MatrixXd> A;  // m x n_i
  VectorXd q;
  std::vector<ObjectiveDesc> objectives;
  double beta = 1.0;
  double gamma = 1.0;
  std::vector<double> alpha;
  Variant variant = Variant::ProxMinusBeta;
  DualSign dual_sign = DualSign::Ascent;
  // reference KKT point, optional
  std::optional<std::vector<VectorXd>> x_star;
  std::optional<VectorXd> lambda_star;
  std::optional<VectorXd> planted;  // generator ground truth, not the optimum

  int m() const { return static_cast<int>(q.size()); }
  int n_blocks() const { return static_cast<int>(A.size()); }
  void validate() const;
  // sigma values from the data, objectives copied
  ProblemSpec spec() const;
  bool has_reference() const { return x_star && lambda_star; }
};

// Solves the KKT system for all-quadratic instances; empty when the constraint is inconsistent.
std::optional<std::pair<std::vector<VectorXd>, VectorXd>> quadratic_reference(const Instance& inst,
                                                                                double tol = 1e-9);

struct AdmmState {
  std::vector<VectorXd> x;
  VectorXd lambda;
};

AdmmState zero_state(const Instance& inst);
AdmmState random_state(const Instance& inst, std::uint64_t seed, double scale = 1.0);
// rows A_i x_i, then lambda; (N+1) x m
MatrixXd reduced_state(const Instance& inst, const AdmmState& s);
std::optional<MatrixXd> reference_state(const Instance& inst);

VectorXd prox_quadratic(double c, const VectorXd& center, double weight);
VectorXd prox_l1(double r, const VectorXd& center);

enum class RunStatus { Completed, Diverged };
const char* to_string(RunStatus s);

struct RunOptions {
  int iters = 100;
  std::optional<MatrixXd> K;      // reduced (N+1)x(N+1) gain, u = K (xi - xi*)
  std::vector<int> sequence;      // GS block order, empty = natural
  std::optional<std::uint64_t> random_order_seed;  // GS: fresh permutation each sweep
  std::optional<AdmmState> init;  // zero state when absent
  bool exact_quadratic_prox = false;
  bool record_states = false;
  double divergence_guard = 1e12;
};

struct Trajectory {
  RunStatus status = RunStatus::Completed;
  int diverged_at = -1;
  // index 0 is the initial state, index t after iteration t
  std::vector<double> primal_residual;
  std::vector<double> distance;  // NaN without a reference
  std::vector<double> state_norm;
  std::vector<MatrixXd> states;
  std::vector<std::vector<int>> sequence_used;
  AdmmState final_state;

  int iterations() const { return static_cast<int>(state_norm.size()) - 1; }
  double relative_error() const;
};

Trajectory run_gs(const Instance& inst, const RunOptions& opts);
Trajectory run_pj(const Instance& inst, const RunOptions& opts);

struct RateEstimate {
  enum class Kind { Rate, Diverged, ExactConvergence, TooShort };
  Kind kind = Kind::TooShort;
  double rho = std::numeric_limits<double>::quiet_NaN();
};

// Fit on the trailing window of samples above floor * d0.
RateEstimate empirical_rate(const std::vector<double>& distances, int window = 50, double floor = 1e-12);
RateEstimate empirical_rate(const Trajectory& t, int window = 50);

enum class InstanceKind { L2, L1 };
struct GenerateOptions {
  InstanceKind kind = InstanceKind::L2;
  int m = 200;
  int n_total = 100;
  int n_blocks = 10;
  int p = 100;
  double sigma = 1e-6;
  std::uint64_t seed = 0;
};
Instance generate_instance(const GenerateOptions& g);

// splitmix64 child seed
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream);

// One-iteration linear map on z = [x_1; ...; x_N; lambda] (quadratic blocks, q = 0 part)
MatrixXd linear_iteration_map(const Instance& inst, Mode mode, const std::optional<MatrixXd>& K = std::nullopt);

}  // namespace admmcert
