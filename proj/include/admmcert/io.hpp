#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "admmcert/certification.hpp"
#include "admmcert/runtime.hpp"
#include "admmcert/sequence_search.hpp"
#include "admmcert/synthesis.hpp"

namespace admmcert {

using json = nlohmann::json;

// "file:line: /pointer: message"
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON pointer -> 1-based line where its value starts
std::map<std::string, int> json_pointer_lines(const std::string& text);

struct SweepGrid {
  std::vector<double> beta, gamma, alpha;
};

struct RunConfig {
  Mode algo = Mode::Jacobi;
  int iters = 400;
  std::vector<int> sequence;
  bool random_order = false;
};

struct Config {
  std::string path;
  ProblemSpec spec;
  Mode mode = Mode::Jacobi;
  Method method = Method::Thm1;
  std::optional<VectorXd> gains;
  std::optional<Instance> instance;
  CertifyOptions cert;
  double tol = 1e-3;
  std::optional<SweepGrid> grid;
  TableMode table_mode = TableMode::JointOnCycle;
  SearchOptions search;
  SynthForm form = SynthForm::C6;
  std::optional<double> gain_bound;
  RunConfig run;
};

Config parse_config(const std::string& text, const std::string& name = "<config>");
Config load_config(const std::string& path);

// Systems described by a config (linearized when the method is linear).
SwitchedSystem config_system(const Config& c);
LinearSwitchedSystem config_linear(const Config& c);
VectorXd config_gains(const Config& c);

// Matrices: nested row-major arrays, or {"rows", "cols", "base64"} of little-endian doubles.
json matrix_to_json(const MatrixXd& M);
json matrix_to_b64(const MatrixXd& M);
MatrixXd matrix_from_json(const json& j, const std::string& where = "");

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

json certificate_to_json(const RateCertificate& c, Mode mode);
RateCertificate certificate_from_json(const json& j);

json controller_to_json(const Controller& c, Mode mode, bool linear, const VectorXd& gains);
struct ControllerFile {
  Controller controller;
  Mode mode = Mode::Jacobi;
  bool linear = false;
  VectorXd gains;
};
ControllerFile controller_from_json(const json& j);

json instance_to_json(const Instance& inst);
Instance instance_from_json(const json& j, const std::string& where = "instance");

void write_trajectory_csv(std::ostream& os, const Trajectory& t);

struct SweepRow {
  double beta, gamma, alpha;
  std::optional<double> tau;
};
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
// tau* vs beta, one polyline per (alpha, gamma)
std::string sweep_svg(const std::vector<SweepRow>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace admmcert
