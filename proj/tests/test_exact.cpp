#include "fixtures.hpp"
#include "sparse_svm/exact.hpp"
#include "sparse_svm/svm.hpp"

#include <gtest/gtest.h>

using namespace sparse_svm;

namespace {

ExactParams small_params(Strategy s, int n) {
  ExactParams p;
  p.s = 1;
  p.heur.strategy = s;
  p.heur.k = 1;
  p.heur.rho = std::min(2, n);
  p.time_limit_s = 60.0;
  return p;
}

void expect_monotone(const ExactResult& r) {
  double lb = -std::numeric_limits<double>::infinity(), ub = std::numeric_limits<double>::infinity();
  for (const auto& it : r.trace) {
    EXPECT_GE(it.LB, lb - 1e-9 * std::max(1.0, std::abs(lb)));
    EXPECT_LE(it.UB, ub + 1e-9 * std::max(1.0, std::abs(ub)));
    EXPECT_LE(it.LB, it.UB + 1e-9 * std::max(1.0, std::abs(it.UB)));
    lb = it.LB;
    ub = it.UB;
  }
}

}  // namespace

TEST(Exact, DensePair) {
  ExactParams p = small_params(Strategy::kKernelSearch, 2);
  const ExactResult r = exact_procedure(fixtures::dense_pair(), 10.0, 1, p);
  EXPECT_EQ(r.mip.status, MipStatus::kGapStop);
  EXPECT_LE(r.trace.size(), 2u);
  EXPECT_NEAR(r.mip.UB, 0.5, 1e-7);
  EXPECT_LE(r.mip.gap, 1e-6);
}

TEST(Exact, MatchesBruteForce) {
  for (unsigned seed = 0; seed < 4; ++seed) {
    const int n = 5 + static_cast<int>(seed % 3);
    const Dataset d = fixtures::random_instance(40, n, 1100 + seed, 3);
    for (Strategy s : {Strategy::kLocalSearch, Strategy::kKernelSearch}) {
      for (int B : {1, 2, n - 1}) {
        const double opt = brute_force_fs(d, 1.0, B).point.objective;
        const ExactResult r = exact_procedure(d, 1.0, B, small_params(s, n));
        ASSERT_EQ(r.mip.status, MipStatus::kGapStop);
        EXPECT_NEAR(r.mip.UB, opt, 1e-5 * (1 + opt)) << seed << " " << B;
        EXPECT_LE(r.mip.LB, opt + 1e-6 * (1 + opt));
        EXPECT_TRUE(fs_feasible(*r.mip.incumbent, d, 1.0, B));
        expect_monotone(r);
      }
    }
  }
}

TEST(Exact, UserMAndDeterminism) {
  const Dataset d = fixtures::random_instance(40, 6, 1200, 3);
  const auto fs = brute_force_fs(d, 1.0, 2);
  ExactParams p = small_params(Strategy::kLocalSearch, 6);
  p.m_source = MSource::kUser;
  p.M = 1.05 * fs.point.w.lpNorm<Eigen::Infinity>() + 1e-3;
  const ExactResult a = exact_procedure(d, 1.0, 2, p);
  const ExactResult b = exact_procedure(d, 1.0, 2, p);
  EXPECT_NEAR(a.mip.UB, fs.point.objective, 1e-5 * (1 + fs.point.objective));
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].K, b.trace[i].K);
}

TEST(Exact, RejectsBadParams) {
  ExactParams p;
  p.s = 0;
  EXPECT_THROW(exact_procedure(fixtures::dense_pair(), 1.0, 1, p), InvalidArgument);
  p.s = 1;
  p.m_source = MSource::kUser;
  EXPECT_THROW(exact_procedure(fixtures::dense_pair(), 1.0, 1, p), InvalidArgument);
}
