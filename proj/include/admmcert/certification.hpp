#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "admmcert/lmi.hpp"
#include "admmcert/system.hpp"

namespace admmcert {

enum class Method { Thm1, Thm2, Cor1, LinC1Finsler, LinC1Sqlf, LinC1Cqlf, LinC2 };
enum class PairSet { Cyclic, FullProduct };
// Lure: standard S-procedure signs (-Gamma F1, -Gamma). Printed: signs as in the theorem statements.
enum class SectorSign { Lure, Printed };
enum class LinearForm { Finsler, Sqlf, Cqlf };

const char* to_string(Method m);
Method method_from_string(const std::string& s);
bool is_linear(Method m);

using Pair = std::pair<int, int>;

struct CertifyOptions {
  PairSet pair_set = PairSet::Cyclic;
  SectorSign sector_sign = SectorSign::Lure;
  std::vector<int> order;   // cyclic order, empty = 0..n-1
  std::vector<Pair> pairs;  // explicit pairs override pair_set
  lmi::SolverOptions solver;
};

// (i, j): subsystem i active now, j next
std::vector<Pair> pair_list(int subsystems, Mode mode, const CertifyOptions& opts);

struct RateCertificate {
  double tau = 1.0;
  Method method = Method::Thm1;
  SectorSign sector_sign = SectorSign::Lure;
  std::vector<Pair> pairs;
  std::vector<int> p_index;  // subsystem owning each P (single entry -1 for a common P)
  std::vector<MatrixXd> P;
  MatrixXd Gamma;
  std::vector<int> aux_index;
  std::vector<MatrixXd> U1, U2, U3;
  double margin = 0.0;
  double chi = 1.0;
  lmi::Assignment assignment;

  const MatrixXd& P_for(int subsystem) const;
};

struct CertifyOutcome {
  lmi::Status status = lmi::Status::NumericalFailure;
  std::optional<RateCertificate> cert;
  lmi::FeasibilityResult raw;
};

lmi::LmiProblem assemble_thm1(const SwitchedSystem& sys, double tau, const CertifyOptions& opts = {});
lmi::LmiProblem assemble_thm2(const SwitchedSystem& sys, double tau, const CertifyOptions& opts = {});
lmi::LmiProblem assemble_cor1(const SwitchedSystem& sys, double tau, const CertifyOptions& opts = {});
lmi::LmiProblem assemble_linear(const LinearSwitchedSystem& sys, double tau, LinearForm form,
                                const CertifyOptions& opts = {});

lmi::LmiProblem assemble(const SwitchedSystem& sys, double tau, Method m, const CertifyOptions& opts = {});
lmi::LmiProblem assemble(const LinearSwitchedSystem& sys, double tau, Method m, const CertifyOptions& opts = {});

CertifyOutcome certify(const SwitchedSystem& sys, double tau, Method m, const CertifyOptions& opts = {});
CertifyOutcome certify(const LinearSwitchedSystem& sys, double tau, Method m, const CertifyOptions& opts = {});

// Re-assembles the LMIs for the certificate and checks the stored assignment.
lmi::VerificationReport verify_certificate(const SwitchedSystem& sys, const RateCertificate& c,
                                           const CertifyOptions& opts = {});
lmi::VerificationReport verify_certificate(const LinearSwitchedSystem& sys, const RateCertificate& c,
                                           const CertifyOptions& opts = {});

// sqrt(max lambda_max(P_i) / min lambda_min(P_j))
double envelope_chi(const std::vector<MatrixXd>& P);

struct MinRateResult {
  std::optional<double> tau;
  std::optional<RateCertificate> cert;
  int probes = 0;
  bool monotonicity_warning = false;
  bool numerical_failure = false;
};

MinRateResult min_rate(const SwitchedSystem& sys, Method m, double tol = 1e-3, const CertifyOptions& opts = {});
MinRateResult min_rate(const LinearSwitchedSystem& sys, Method m, double tol = 1e-3,
                       const CertifyOptions& opts = {});

}  // namespace admmcert
