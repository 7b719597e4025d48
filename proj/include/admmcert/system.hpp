#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace admmcert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Variant { ProxMinusBeta, ProxIdentity };
enum class MuConvention { Conservative, PaperLiteral };
// Ascent: lambda+ = lambda + gamma*beta*(sum - q). AsPrinted flips the sign.
enum class DualSign { Ascent, AsPrinted };
enum class Mode { GaussSeidel, Jacobi };

struct ObjectiveDesc {
  enum class Kind { Quadratic, L1, SectorOnly };
  Kind kind = Kind::SectorOnly;
  double c = 0.0;  // Quadratic: f = c*|x|^2
  double r = 0.0;  // L1 weight
  std::vector<double> nu_minus;
  std::vector<double> nu_plus;

  static ObjectiveDesc quadratic(double c, int dims = 1);
  static ObjectiveDesc l1(double r, int dims = 1);
  static ObjectiveDesc sector(double lo, double hi, int dims = 1);
};

struct BlockSpec {
  double sigma_max = 1.0;
  double sigma_min = 1.0;
  ObjectiveDesc objective;
  double norm_sq() const { return sigma_max * sigma_max; }
};

struct ProblemSpec {
  std::vector<BlockSpec> blocks;
  double beta = 1.0;
  double gamma = 1.0;
  std::vector<double> alpha;
  Variant variant = Variant::ProxMinusBeta;
  MuConvention mu_convention = MuConvention::Conservative;
  DualSign dual_sign = DualSign::Ascent;
  std::optional<VectorXd> q;  // exact vector when known
  double q_norm = 0.0;

  int n_blocks() const { return static_cast<int>(blocks.size()); }
  double alpha_hat(int i) const { return alpha.at(i) / blocks.at(i).norm_sq(); }
};

// Throws std::invalid_argument with a field path on bad input.
void validate(const ProblemSpec& spec);
// S_i = alpha_i I - beta A_i^T A_i indefinite for some block
bool indefinite_prox(const ProblemSpec& spec);

struct SectorBounds {
  VectorXd mu_minus;
  VectorXd mu_plus;
  MatrixXd F1;
  MatrixXd F2;
};

struct SwitchedSystem {
  int n = 0;  // N + 1
  MatrixXd B, C, D, E;
  MatrixXd K;  // applied gain, zero when uncontrolled
  Mode mode = Mode::Jacobi;
  SectorBounds sector;
  bool hold_semantics = true;
  DualSign dual_sign = DualSign::Ascent;

  MatrixXd closed_loop() const { return B + D * K; }
  MatrixXd selector(int i) const;
  int subsystem_count() const { return mode == Mode::GaussSeidel ? n : 1; }
  MatrixXd A_hat(int i) const;
  MatrixXd C_hat(int i) const;
};

struct LinearSwitchedSystem {
  int n = 0;
  MatrixXd Bfull;  // B + DK + C G, before hold
  MatrixXd D;
  MatrixXd K;
  VectorXd gains;
  Mode mode = Mode::Jacobi;

  int subsystem_count() const { return mode == Mode::GaussSeidel ? n : 1; }
  MatrixXd Bbar(int i) const;
};

SectorBounds build_sector_bounds(const ProblemSpec& spec);
SwitchedSystem build_system(const ProblemSpec& spec, Mode mode);

// Systems from raw matrices (scalar examples, random tests).
SwitchedSystem make_system(const MatrixXd& B, const MatrixXd& C, const MatrixXd& D, const SectorBounds& s,
                           Mode mode);
LinearSwitchedSystem make_linear(const MatrixXd& B, const MatrixXd& D, Mode mode);

// gains per block (size N or N+1 with last entry 0)
LinearSwitchedSystem linearize(const SwitchedSystem& sys, const VectorXd& gains);
// Quadratic: 2c/|A_i|^2, otherwise the sector midpoint.
VectorXd nominal_gains(const ProblemSpec& spec, const SectorBounds& s);

SwitchedSystem apply_controller(const SwitchedSystem& sys, const MatrixXd& K);
LinearSwitchedSystem apply_controller(const LinearSwitchedSystem& sys, const MatrixXd& K);

// One reduced step of subsystem i on an n x d state with per-block slopes.
// affine: n x d rows added to the active rows (E*phi - D*K*xi_star).
MatrixXd reduced_step(const SwitchedSystem& sys, int subsystem, const MatrixXd& xi, const VectorXd& slopes,
                      const MatrixXd* affine = nullptr);

// n x d matrix of E*phi with phi = 1 (x) q
MatrixXd offset_rows(const SwitchedSystem& sys, const VectorXd& q);

double spectral_radius(const MatrixXd& M);

}  // namespace admmcert
