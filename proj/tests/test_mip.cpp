#include "fixtures.hpp"
#include "sparse_svm/mip.hpp"
#include "sparse_svm/relaxations.hpp"
#include "sparse_svm/svm.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

using namespace sparse_svm;

namespace {

void expect_sound(const MipResult& r, const Dataset& d, double C, int B) {
  ASSERT_TRUE(r.incumbent.has_value());
  EXPECT_TRUE(fs_feasible(*r.incumbent, d, C, B));
  EXPECT_LE(r.LB, r.UB + 1e-9 * std::max(1.0, std::abs(r.UB)));
  if (r.status == MipStatus::kOptimal) {
    EXPECT_LE(r.gap, 1e-6);
  }
}

}  // namespace

TEST(CopRestricted, DensePair) {
  const Dataset d = fixtures::dense_pair();
  BranchSpec spec;
  spec.K = {0, 1};
  const MipResult r = solve_cop_restricted(d, 10.0, 1, spec);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  EXPECT_NEAR(r.UB, 0.5, 1e-7);
  EXPECT_EQ(r.incumbent->support, std::vector<int>{0});
  expect_sound(r, d, 10.0, 1);

  spec.extra_ub_cutoff = 0.4;
  const MipResult cut = solve_cop_restricted(d, 10.0, 1, spec);
  EXPECT_EQ(cut.status, MipStatus::kInfeasible);
  EXPECT_FALSE(cut.incumbent.has_value());
}

TEST(CopRestricted, SparsePair) {
  const Dataset d = fixtures::sparse_pair();
  BranchSpec spec;
  spec.K = {0, 1};
  const MipResult r = solve_cop_restricted(d, 1.0, 1, spec);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  EXPECT_NEAR(r.UB, 0.5, 1e-7);
  EXPECT_EQ(r.incumbent->support, std::vector<int>{0});
}

TEST(CopRestricted, CoverForcesNewFeature) {
  const Dataset d = fixtures::sparse_pair();
  BranchSpec spec;
  spec.K = {0, 1};
  spec.cover_set = {1};
  const MipResult r = solve_cop_restricted(d, 1.0, 1, spec);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  // Only feature 1 may be used: w = 0 and every sample pays slack 1.
  EXPECT_NEAR(r.UB, 2.0, 1e-6);
  ASSERT_TRUE(r.binary_assignment.has_value());
  EXPECT_EQ(*r.binary_assignment, Eigen::Vector2d(1, 0));
}

TEST(CopRestricted, SupportInsideK) {
  const Dataset d = fixtures::random_instance(30, 6, 77, 3);
  BranchSpec spec;
  spec.K = {1, 3, 4};
  const MipResult r = solve_cop_restricted(d, 1.0, 2, spec);
  expect_sound(r, d, 1.0, 2);
  for (int j : r.incumbent->support) EXPECT_TRUE(j == 1 || j == 3 || j == 4);
  double best = std::numeric_limits<double>::infinity();
  for (auto s : std::vector<std::vector<int>>{{1, 3}, {1, 4}, {3, 4}}) best = std::min(best, solve_svm(d, 1.0, s).objective);
  EXPECT_NEAR(r.UB, best, 1e-6 * (1 + best));
}

TEST(FullMip, DensePairBothFormulations) {
  const Dataset d = fixtures::dense_pair();
  EXPECT_NEAR(solve_cop_full(d, 10.0, 1).UB, 0.5, 1e-7);
  EXPECT_NEAR(solve_bigmp_full(d, 10.0, 1, 1.0).UB, 0.5, 1e-7);
}

TEST(FullMip, MatchesBruteForce) {
  for (unsigned seed = 0; seed < 6; ++seed) {
    const int n = 5 + static_cast<int>(seed % 3);
    const Dataset d = fixtures::random_instance(30, n, 300 + seed, 3);
    for (double C : {0.1, 1.0, 10.0}) {
      for (int B = 1; B < n; B += 2) {
        const auto oracle = brute_force_fs(d, C, B);
        const double ref = oracle.point.objective;
        const double M = 1.01 * oracle.point.w.lpNorm<Eigen::Infinity>() + 1e-3;
        const MipResult cop = solve_cop_full(d, C, B);
        const MipResult big = solve_bigmp_full(d, C, B, M);
        ASSERT_EQ(cop.status, MipStatus::kOptimal);
        ASSERT_EQ(big.status, MipStatus::kOptimal);
        expect_sound(cop, d, C, B);
        expect_sound(big, d, C, B);
        EXPECT_NEAR(cop.UB, ref, 1e-5 * (1 + ref)) << seed << " " << C << " " << B;
        EXPECT_NEAR(big.UB, ref, 1e-5 * (1 + ref)) << seed << " " << C << " " << B;
        EXPECT_NEAR(cop.UB, big.UB, 1e-6 * (1 + cop.UB));
      }
    }
  }
}

TEST(FullMip, FullBudgetIsSvm) {
  const Dataset d = fixtures::random_instance(25, 4, 9);
  EXPECT_NEAR(solve_cop_full(d, 1.0, 4).UB, solve_svm(d, 1.0).objective, 1e-7);
}

TEST(FullMip, Guard) {
  const Dataset d = fixtures::random_instance(10, 5, 9);
  EXPECT_THROW(solve_cop_full(d, 1.0, 1, {}, 4), GuardExceeded);
  BranchSpec spec;
  spec.K = {0, 1};
  spec.formulation = Formulation::kBigM;
  EXPECT_THROW(solve_cop_restricted(d, 1.0, 1, spec), InvalidArgument);
}

TEST(FullMip, NodeBoundsNondecreasingAlongPaths) {
  const Dataset d = fixtures::random_instance(30, 6, 31, 4, 1.2);
  std::ostringstream log;
  MipOptions opt;
  opt.node_log = &log;
  const MipResult r = solve_cop_full(d, 1.0, 2, opt);
  ASSERT_EQ(r.status, MipStatus::kOptimal);
  // Each line names its parent, so bounds can be compared along every edge.
  std::istringstream in(log.str());
  std::string line;
  std::map<long, double> bound_of;
  long lines = 0;
  while (std::getline(in, line)) {
    long id = 0, parent = 0;
    int depth = 0;
    double bound = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "node id=%ld parent=%ld depth=%d bound=%lf", &id, &parent, &depth, &bound), 4)
        << line;
    ++lines;
    bound_of[id] = bound;
    const auto it = bound_of.find(parent);
    if (it != bound_of.end() && std::isfinite(bound) && std::isfinite(it->second)) {
      EXPECT_GE(bound, it->second - 1e-9);
    }
  }
  EXPECT_EQ(lines, r.nodes_explored);
}

TEST(SrDlmp, EmptyKIsDscop) {
  const Dataset d = fixtures::random_instance(30, 5, 41, 3);
  const auto sr = solve_sr_dlmp(d, 1.0, 2, {}, 5.0);
  EXPECT_NEAR(sr.mip.LB, solve_dscop(d, 1.0, 2).lower_bound, 1e-6);
}

TEST(SrDlmp, DensePair) {
  const auto sr = solve_sr_dlmp(fixtures::dense_pair(), 10.0, 1, {0}, 1.0);
  EXPECT_NEAR(sr.mip.LB, 0.5, 1e-7);
  EXPECT_EQ(sr.relaxed_u.size(), 2);
}

TEST(SrDlmp, FullKIsExactAndNestedKMonotone) {
  for (unsigned seed = 0; seed < 4; ++seed) {
    const Dataset d = fixtures::random_instance(30, 6, 500 + seed, 3);
    const int B = 2;
    const auto oracle = brute_force_fs(d, 1.0, B);
    const double M = 1.01 * oracle.point.w.lpNorm<Eigen::Infinity>() + 1e-3;
    double prev = -1.0;
    for (std::vector<int> K : std::vector<std::vector<int>>{{}, {0}, {0, 3}, {0, 3, 5}, {0, 1, 2, 3, 4, 5}}) {
      const double lb = solve_sr_dlmp(d, 1.0, B, K, M).mip.LB;
      EXPECT_GE(lb, prev - 1e-7 * (1 + std::abs(prev)));
      EXPECT_LE(lb, oracle.point.objective + 1e-6 * (1 + oracle.point.objective));
      prev = lb;
    }
    EXPECT_NEAR(prev, oracle.point.objective, 1e-5 * (1 + oracle.point.objective));
  }
}

TEST(SrDlmp, CutoffCapsBound) {
  const Dataset d = fixtures::random_instance(30, 6, 600, 3);
  const double opt = brute_force_fs(d, 1.0, 2).point.objective;
  const auto sr = solve_sr_dlmp(d, 1.0, 2, {0, 1, 2, 3, 4, 5}, 10.0, {}, opt * 0.9);
  EXPECT_NEAR(sr.mip.LB, opt * 0.9, 1e-12);
}
