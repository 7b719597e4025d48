#include <gtest/gtest.h>

#include <random>

#include "admmcert/sequence_search.hpp"
#include "fixtures.hpp"

using namespace admmcert;

namespace {

// exhaustive enumeration filtered by the same predicates
std::vector<Sequence> brute_force(const PairTable& T, const SearchOptions& o) {
  int n = T.n;
  std::vector<Sequence> out;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= n;
  for (long code = 0; code < total; ++code) {
    Sequence s(n);
    long c = code;
    for (int i = n - 1; i >= 0; --i) {
      s[i] = static_cast<int>(c % n);
      c /= n;
    }
    bool ok = true;
    if (o.repetition == Repetition::PermutationOnly) {
      Sequence t = s;
      std::sort(t.begin(), t.end());
      ok = std::adjacent_find(t.begin(), t.end()) == t.end();
    }
    for (int r = 1; ok && r < n; ++r) {
      if (o.legality == Legality::Consecutive)
        ok = T.at(s[r - 1], s[r]);
      else
        for (int i = 0; ok && i < r; ++i) ok = T.at(s[i], s[r]);
    }
    if (ok && T.at(s[n - 1], s[0])) out.push_back(s);
  }
  return out;
}

PairTable table(int n, std::vector<std::pair<int, int>> edges) {
  PairTable t;
  t.n = n;
  t.feasible.assign(n, std::vector<bool>(n, false));
  for (auto [i, j] : edges) t.feasible[i][j] = true;
  return t;
}

}  // namespace

TEST(Search, AllTrue) {
  PairTable t = table(3, {});
  for (auto& r : t.feasible) r.assign(3, true);
  SearchOptions o;
  o.repetition = Repetition::Allowed;
  EXPECT_EQ(recursive_search(t, o).size(), 27u);
  EXPECT_EQ(recursive_search(t).size(), 6u);
}

TEST(Search, AllFalse) { EXPECT_TRUE(recursive_search(table(3, {})).empty()); }

TEST(Search, SingleCycle) {
  auto t = table(3, {{0, 1}, {1, 2}, {2, 0}});
  SearchOptions o;
  o.repetition = Repetition::Allowed;
  auto s = recursive_search(t, o);
  std::vector<Sequence> expect{{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  EXPECT_EQ(s, expect);
  EXPECT_EQ(s, brute_force(t, o));
}

TEST(Search, BruteForceSmall) {
  std::mt19937_64 rng(4);
  for (int n = 1; n <= 3; ++n) {
    int cells = n * n;
    for (long code = 0; code < (1L << cells); ++code) {
      PairTable t = table(n, {});
      for (int k = 0; k < cells; ++k) t.feasible[k / n][k % n] = (code >> k) & 1;
      for (Legality l : {Legality::Consecutive, Legality::AllPrevious})
        for (Repetition r : {Repetition::PermutationOnly, Repetition::Allowed}) {
          SearchOptions o{l, r};
          ASSERT_EQ(recursive_search(t, o), brute_force(t, o));
        }
    }
  }
}

TEST(Search, CyclePairs) {
  auto p = cycle_pairs({0, 2, 1});
  std::vector<Pair> expect{{0, 2}, {2, 1}, {1, 0}};
  EXPECT_EQ(p, expect);
}

TEST(Table, ZeroSectorStableOffDiagonal) {
  auto spec = fixtures::experiment1();
  for (auto& b : spec.blocks) b.objective = ObjectiveDesc::sector(0, 0);
  auto sys = build_system(spec, Mode::GaussSeidel);
  auto t = build_pair_table(sys, 0.95, Method::Thm1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(t.at(i, j), i != j) << i << "," << j;
}

TEST(Table, Experiment1JointCycles) {
  auto sys = build_system(fixtures::experiment1(), Mode::GaussSeidel);
  auto r = min_rate(sys, Method::Thm1);
  ASSERT_TRUE(r.tau);
  double tau = std::min(0.999, *r.tau + 0.002);
  auto t = build_pair_table(sys, tau, Method::Thm1);
  auto found = recursive_search(t, {}, joint_checker(sys, tau, Method::Thm1));
  // the natural sweep and its rotations are certified
  for (Sequence s : {Sequence{0, 1, 2, 3}, Sequence{1, 2, 3, 0}})
    EXPECT_NE(std::find(found.begin(), found.end(), s), found.end());
}

TEST(Table, ExplosiveSubsystemRejected) {
  // scalar-row system where subsystem 1 has gain 3 > 1/tau
  MatrixXd B = MatrixXd::Zero(2, 2);
  B(0, 0) = 3.0;
  B(1, 1) = 0.2;
  SectorBounds s{VectorXd::Zero(1), VectorXd::Zero(1), MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)};
  auto sys = make_system(B, MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), s, Mode::GaussSeidel);
  auto t = build_pair_table(sys, 0.9, Method::Thm1);
  EXPECT_FALSE(t.at(0, 0));
  EXPECT_FALSE(t.at(1, 1));
  auto found = recursive_search(t, {}, joint_checker(sys, 0.9, Method::Thm1));
  EXPECT_TRUE(found.empty());
}
