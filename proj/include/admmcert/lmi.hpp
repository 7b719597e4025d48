#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace admmcert {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Ascending eigenvalues of a symmetric matrix. Throws on asymmetric input.
VectorXd eigvals_sym(const MatrixXd& M, double asym_tol = 1e-10);

namespace lmi {

enum class VarKind { Symmetric, PositiveDefinite, Diagonal, DiagonalNonneg, Full };

struct VarId {
  int index = -1;
};

struct Variable {
  std::string name;
  int rows = 0;
  int cols = 0;
  VarKind kind = VarKind::Full;
};

// left * X * right (or left * X^T * right)
struct Term {
  int var = -1;
  MatrixXd left;
  MatrixXd right;
  bool transposed = false;
};

using Assignment = std::vector<MatrixXd>;

class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(int rows, int cols);
  static AffineExpr constant(const MatrixXd& c);

  AffineExpr& add(VarId v, const MatrixXd& left, const MatrixXd& right, bool transposed = false);
  AffineExpr& add_constant(const MatrixXd& c);
  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr operator-() const;
  AffineExpr transpose() const;
  AffineExpr scaled(double s) const;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const MatrixXd& constant_part() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

  MatrixXd evaluate(const Assignment& a) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  MatrixXd constant_;
  std::vector<Term> terms_;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator*(const MatrixXd& left, const AffineExpr& e);
AffineExpr operator*(const AffineExpr& e, const MatrixXd& right);

// Symmetric block matrix, only blocks (r <= c) are stored. Required to be negative definite.
struct Constraint {
  std::string label;
  std::vector<int> block_sizes;
  std::map<std::pair<int, int>, AffineExpr> upper;

  int dim() const;
  void set(int r, int c, AffineExpr e);
};

struct Equality {
  std::string label;
  AffineExpr expr;  // == 0
};

class LmiProblem {
 public:
  VarId add_variable(const std::string& name, int rows, int cols, VarKind kind);
  void add_constraint(Constraint c);
  void add_equality(const std::string& label, AffineExpr e);

  // X itself as an expression
  AffineExpr var(VarId v) const;

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<Equality>& equalities() const { return equalities_; }
  std::optional<VarId> find(const std::string& name) const;

  MatrixXd evaluate(const Constraint& c, const Assignment& a) const;
  bool homogeneous() const;

  // throws std::invalid_argument on dimension mismatch or an asymmetric diagonal block
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> constraints_;
  std::vector<Equality> equalities_;
};

enum class Status { Feasible, Infeasible, NumericalFailure };
const char* to_string(Status s);

struct SolverOptions {
  double eps = 1e-7;
  double bound = 1e6;          // box / upper bound on variables
  double stop_margin = 1e-3;   // early exit once t < -stop_margin
  int max_newton = 600;
  int max_block_dim = 64;
};

struct ConstraintReport {
  std::string label;
  double max_eig = 0.0;
  double required = 0.0;  // max_eig must be <= -required
  bool ok = false;
};

struct VerificationReport {
  bool ok = false;
  double margin = 0.0;  // min over constraints of -max_eig
  std::vector<ConstraintReport> constraints;
  std::vector<std::string> failures;
};

struct FeasibilityResult {
  Status status = Status::NumericalFailure;
  Assignment assignment;
  double margin = 0.0;
  double best_slack = 0.0;
  int iterations = 0;
  std::string message;
  VerificationReport report;
};

FeasibilityResult solve_feasibility(const LmiProblem& p, const SolverOptions& opts = {});
VerificationReport verify_assignment(const LmiProblem& p, const Assignment& a, double eps);

// Plain SDPA-sparse dump of the slack-free problem, debugging aid.
std::string dump_sdpa(const LmiProblem& p);

}  // namespace lmi
}  // namespace admmcert
