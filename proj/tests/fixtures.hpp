#pragma once

#include <Eigen/Dense>
#include <vector>

#include <random>

#include "admmcert/runtime.hpp"
#include "admmcert/system.hpp"

namespace fixtures {

using admmcert::ProblemSpec;

inline admmcert::BlockSpec column_block(const Eigen::VectorXd& a, admmcert::ObjectiveDesc o) {
  admmcert::BlockSpec b;
  b.sigma_max = b.sigma_min = a.norm();
  b.objective = o;
  return b;
}

// three scalar blocks with columns A1, A2, A3 and f_i = 0.05 x^2
inline ProblemSpec counter_example(double beta = 1, double gamma = 1, double alpha = 1) {
  ProblemSpec s;
  s.blocks = {column_block(Eigen::Vector3d(1, 1, 1), admmcert::ObjectiveDesc::quadratic(0.05)),
              column_block(Eigen::Vector3d(1, 1, 2), admmcert::ObjectiveDesc::quadratic(0.05)),
              column_block(Eigen::Vector3d(1, 2, 2), admmcert::ObjectiveDesc::quadratic(0.05))};
  s.beta = beta;
  s.gamma = gamma;
  s.alpha = {alpha, alpha, alpha};
  return s;
}

inline ProblemSpec experiment1(double gamma = 0.8, double beta = 3.0, double alpha = 0.8) {
  ProblemSpec s;
  s.blocks = {column_block(Eigen::Vector3d(0.1, -0.2, 0.3), admmcert::ObjectiveDesc::quadratic(0.1)),
              column_block(Eigen::Vector3d(-0.3, -0.2, 0.2), admmcert::ObjectiveDesc::quadratic(0.2)),
              column_block(Eigen::Vector3d(0.1, -0.1, 0.1), admmcert::ObjectiveDesc::quadratic(0.1))};
  s.beta = beta;
  s.gamma = gamma;
  s.alpha = {alpha, alpha, alpha};
  return s;
}

inline admmcert::Instance column_instance(const std::vector<Eigen::Vector3d>& cols, const std::vector<double>& c,
                                          double beta, double gamma, double alpha) {
  admmcert::Instance in;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    in.A.push_back(cols[i]);
    in.objectives.push_back(admmcert::ObjectiveDesc::quadratic(c[i]));
    in.alpha.push_back(alpha);
  }
  in.q = Eigen::VectorXd::Zero(3);
  in.beta = beta;
  in.gamma = gamma;
  return in;
}

inline admmcert::Instance counter_instance(double beta = 1, double gamma = 1, double alpha = 1) {
  return column_instance({{1, 1, 1}, {1, 1, 2}, {1, 2, 2}}, {0.05, 0.05, 0.05}, beta, gamma, alpha);
}

inline admmcert::Instance experiment1_instance() {
  return column_instance({{0.1, -0.2, 0.3}, {-0.3, -0.2, 0.2}, {0.1, -0.1, 0.1}}, {0.1, 0.2, 0.1}, 3.0, 0.8, 0.8);
}

// square blocks s_i Q_i with Q_i orthogonal, so the reduced model is exact
inline admmcert::Instance isotropic_instance(int N, int d, std::uint64_t seed, double beta = 1.0, double gamma = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> nd;
  admmcert::Instance in;
  for (int i = 0; i < N; ++i) {
    Eigen::MatrixXd G(d, d);
    for (int k = 0; k < d * d; ++k) G.data()[k] = nd(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    double s = 0.5 + u(rng);
    in.A.push_back(s * Q);
    in.objectives.push_back(admmcert::ObjectiveDesc::quadratic(0.2 + u(rng), d));
    in.alpha.push_back((N + 2.0) * beta * s * s);
  }
  in.q = Eigen::VectorXd(d);
  for (int k = 0; k < d; ++k) in.q(k) = nd(rng);
  in.beta = beta;
  in.gamma = gamma;
  auto ref = admmcert::quadratic_reference(in);
  in.x_star = ref->first;
  in.lambda_star = ref->second;
  return in;
}

}  // namespace fixtures
