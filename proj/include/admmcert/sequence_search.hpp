#pragma once

#include <functional>
#include <vector>

#include "admmcert/certification.hpp"

namespace admmcert {

enum class TableMode { PerPairIndependent, JointOnCycle };
// Consecutive: S[r-1] -> S[r] must hold. AllPrevious: S[i] -> S[r] for every i < r.
enum class Legality { Consecutive, AllPrevious };
enum class Repetition { PermutationOnly, Allowed };

struct PairTable {
  int n = 0;
  std::vector<std::vector<bool>> feasible;
  double tau = 0.0;
  Method method = Method::Thm1;
  TableMode mode = TableMode::PerPairIndependent;

  bool at(int i, int j) const { return feasible[i][j]; }
};

struct SearchOptions {
  Legality legality = Legality::Consecutive;
  Repetition repetition = Repetition::PermutationOnly;
};

using Sequence = std::vector<int>;
using JointCheck = std::function<bool(const Sequence&)>;

PairTable build_pair_table(const SwitchedSystem& sys, double tau, Method m,
                           TableMode mode = TableMode::PerPairIndependent, const CertifyOptions& opts = {});

// Depth-first backtracking; output sorted lexicographically.
std::vector<Sequence> recursive_search(const PairTable& table, const SearchOptions& opts = {},
                                       const JointCheck& joint = nullptr);

// Pairs visited by the cyclic sequence, wrap-around included, without duplicates.
std::vector<Pair> cycle_pairs(const Sequence& s);

// Joint LMI over exactly the cycle's consecutive pairs, shared P per subsystem.
JointCheck joint_checker(const SwitchedSystem& sys, double tau, Method m, const CertifyOptions& opts = {});

}  // namespace admmcert
