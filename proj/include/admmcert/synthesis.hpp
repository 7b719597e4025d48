#pragma once

#include <optional>
#include <string>
#include <vector>

#include "admmcert/certification.hpp"

namespace admmcert {

enum class SynthForm { Thm3, Cor2, C3, C4, C5, C6 };
const char* to_string(SynthForm f);
SynthForm synth_form_from_string(const std::string& s);

struct Controller {
  MatrixXd K;
  SynthForm source = SynthForm::C6;
  double tau_design = 0.0;
  RateCertificate certificate;  // closed-loop certificate
};

struct SynthesisOptions {
  CertifyOptions cert;
  // C4/C6 only: N^T N < gain_bound * I when set
  std::optional<double> gain_bound;
};

struct SynthesisOutcome {
  lmi::Status status = lmi::Status::NumericalFailure;
  std::optional<Controller> controller;
  std::string message;
};

SynthesisOutcome synthesize_gs(const SwitchedSystem& sys, double tau, const SynthesisOptions& opts = {});
SynthesisOutcome synthesize_pj(const SwitchedSystem& sys, double tau, const SynthesisOptions& opts = {});
SynthesisOutcome synthesize_linear(const LinearSwitchedSystem& sys, double tau, SynthForm form,
                                   const SynthesisOptions& opts = {});

// Closed-loop certificate check used on every emitted controller and before runs.
lmi::VerificationReport verify_controller(const SwitchedSystem& sys, const Controller& c,
                                          const CertifyOptions& opts = {});
lmi::VerificationReport verify_controller(const LinearSwitchedSystem& sys, const Controller& c,
                                          const CertifyOptions& opts = {});

struct ConstraintHyperplane {
  int row = 0;
  VectorXd coefficients;
  VectorXd rhs;
  bool degenerate = false;
  bool estimated = false;  // equilibrium was an estimate
};

// Row i of K gives sum_j k_ij xi_j = q_i with q_i = sum_j k_ij xi*_j. xi_star is n x d.
std::vector<ConstraintHyperplane> controller_constraints(const MatrixXd& K, const MatrixXd& xi_star,
                                                         bool estimated = false);
std::string format_hyperplane(const ConstraintHyperplane& h, const std::vector<std::string>& labels,
                              int precision = 2);
// xi1..xiN, lambda for reduced systems
std::vector<std::string> reduced_labels(int n);

}  // namespace admmcert
