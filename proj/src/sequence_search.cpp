#include "admmcert/sequence_search.hpp"

#include <algorithm>
#include <stdexcept>

namespace admmcert {

PairTable build_pair_table(const SwitchedSystem& sys, double tau, Method m, TableMode mode,
                           const CertifyOptions& opts) {
  if (sys.mode != Mode::GaussSeidel) throw std::invalid_argument("build_pair_table: Gauss-Seidel system required");
  PairTable t;
  t.n = sys.subsystem_count();
  t.tau = tau;
  t.method = m;
  t.mode = mode;
  t.feasible.assign(t.n, std::vector<bool>(t.n, true));
  if (mode == TableMode::JointOnCycle) return t;
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j) {
      CertifyOptions o = opts;
      o.pairs = {{i, j}};
      t.feasible[i][j] = certify(sys, tau, m, o).status == lmi::Status::Feasible;
    }
  return t;
}

namespace {

struct Search {
  const PairTable& T;
  const SearchOptions& o;
  const JointCheck& joint;
  Sequence S;
  std::vector<bool> used;
  std::vector<Sequence> out;

  bool legal(int r, int j) const {
    if (o.repetition == Repetition::PermutationOnly && used[j]) return false;
    if (r == 0) return true;
    if (o.legality == Legality::Consecutive) return T.at(S[r - 1], j);
    for (int i = 0; i < r; ++i)
      if (!T.at(S[i], j)) return false;
    return true;
  }

  void run(int r) {
    int n = T.n;
    if (r == n) {
      if (T.at(S[n - 1], S[0]) && (!joint || joint(S))) out.push_back(S);
      return;
    }
    for (int j = 0; j < n; ++j) {
      if (!legal(r, j)) continue;
      S[r] = j;
      used[j] = true;
      run(r + 1);
      used[j] = false;
    }
  }
};

}  // namespace

std::vector<Sequence> recursive_search(const PairTable& table, const SearchOptions& opts, const JointCheck& joint) {
  if (table.n <= 0) return {};
  Search s{table, opts, joint, Sequence(table.n), std::vector<bool>(table.n, false), {}};
  s.run(0);
  std::sort(s.out.begin(), s.out.end());
  return s.out;
}

std::vector<Pair> cycle_pairs(const Sequence& s) {
  std::vector<Pair> p;
  for (size_t a = 0; a < s.size(); ++a) {
    Pair q{s[a], s[(a + 1) % s.size()]};
    if (std::find(p.begin(), p.end(), q) == p.end()) p.push_back(q);
  }
  return p;
}

JointCheck joint_checker(const SwitchedSystem& sys, double tau, Method m, const CertifyOptions& opts) {
  return [sys, tau, m, opts](const Sequence& s) {
    CertifyOptions o = opts;
    o.pairs = cycle_pairs(s);
    return certify(sys, tau, m, o).status == lmi::Status::Feasible;
  };
}

}  // namespace admmcert
