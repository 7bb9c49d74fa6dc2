#include "fixtures.hpp"
#include "sparse_svm/heuristics.hpp"
#include "sparse_svm/svm.hpp"

#include <gtest/gtest.h>

using namespace sparse_svm;

namespace {

double rel(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

// Feature 1 is sign-symmetric: x1 -> -x1 maps the sample set onto itself.
Dataset mirrored_square() {
  Eigen::MatrixXd X(4, 2);
  X << 1, 1, 1, -1, -1, 1, -1, -1;
  return {X, Eigen::Vector4d(1, 1, -1, -1)};
}

}  // namespace

TEST(Ranking, TiesGoToSmallerIndex) {
  const RankedFeatures r = rank_ascending(Eigen::Vector4d(0.3, 0.1, 0.3 + 1e-9, 0.1));
  EXPECT_EQ(r.order, (std::vector<int>{1, 3, 0, 2}));
  const RankedFeatures s = rank_least_binary(Eigen::Vector4d(0.0, 0.5, 1.0, 0.5));
  EXPECT_EQ(s.order, (std::vector<int>{1, 3, 0, 2}));
  EXPECT_DOUBLE_EQ(s.key[1], 0.25);
}

TEST(Buckets, RemainderGoesLast) {
  const auto b = make_buckets({4, 0, 3, 1, 2}, 2);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0], (std::vector<int>{4, 0}));
  EXPECT_EQ(b[2], (std::vector<int>{2}));
  EXPECT_EQ(make_buckets({0, 1, 2}, 3).size(), 1u);
}

TEST(LocalSearch, SparsePair) {
  const Dataset d = fixtures::sparse_pair();
  const HeuristicResult r = local_search(d, 1.0, 1, 0);
  EXPECT_NEAR(r.ranking_u[0], 0.0, 1e-5);
  EXPECT_NEAR(r.ranking_u[1], 1.0, 1e-5);
  ASSERT_EQ(r.stages.size(), 1u);
  EXPECT_EQ(r.stages[0].K, std::vector<int>{0});
  EXPECT_NEAR(r.UB, 0.5, 1e-7);
  EXPECT_TRUE(fs_feasible(r.point, d, 1.0, 1));
}

TEST(LocalSearch, DensePair) {
  EXPECT_NEAR(local_search(fixtures::dense_pair(), 10.0, 1, 1).UB, 0.5, 1e-7);
}

TEST(LocalSearch, FullKIsExact) {
  for (unsigned seed = 0; seed < 4; ++seed) {
    const Dataset d = fixtures::random_instance(30, 6, 700 + seed, 3);
    for (int B : {1, 3}) {
      const double opt = brute_force_fs(d, 1.0, B).point.objective;
      const HeuristicResult r = local_search(d, 1.0, B, 6 - B);
      EXPECT_NEAR(r.UB, opt, 1e-5 * (1 + opt));
    }
  }
}

TEST(LocalSearch, RejectsBadK) {
  EXPECT_THROW(local_search(fixtures::dense_pair(), 1.0, 1, 2), InvalidArgument);
  EXPECT_THROW(local_search(fixtures::dense_pair(), 1.0, 1, -1), InvalidArgument);
}

TEST(KernelSearch, DensePairSwapsSupport) {
  const Dataset d = fixtures::dense_pair();
  const HeuristicResult r = kernel_search(d, 10.0, 1, 1);
  ASSERT_EQ(r.stages.size(), 2u);
  EXPECT_EQ(r.stages[0].K, std::vector<int>{0});
  EXPECT_NEAR(*r.stages[0].objective, 0.5, 1e-7);
  EXPECT_EQ(r.stages[1].K, (std::vector<int>{0, 1}));
  ASSERT_TRUE(r.stages[1].objective.has_value());
  EXPECT_NEAR(*r.stages[1].objective, 0.5, 1e-7);
  EXPECT_EQ(r.point.support, std::vector<int>{1});
  EXPECT_NEAR(r.UB, 0.5, 1e-7);
}

TEST(KernelSearch, SingleBucketMatchesLocalSearch) {
  const Dataset d = fixtures::random_instance(30, 5, 71, 3);
  for (int B : {1, 2, 4}) {
    const double ks = kernel_search(d, 1.0, B, 5).UB;
    const double ls = local_search(d, 1.0, B, 5 - B).UB;
    EXPECT_NEAR(ks, ls, 1e-7 * (1 + ls));
  }
}

TEST(KernelSearch, SoundAndMonotone) {
  for (unsigned seed = 0; seed < 6; ++seed) {
    const int n = 5 + static_cast<int>(seed % 3);
    const Dataset d = fixtures::random_instance(30, n, 800 + seed, 3);
    for (int B : {1, 2}) {
      for (int rho : {1, 2, 3}) {
        const HeuristicResult r = kernel_search(d, 1.0, B, rho);
        EXPECT_TRUE(fs_feasible(r.point, d, 1.0, B));
        EXPECT_GE(r.UB, brute_force_fs(d, 1.0, B).point.objective - rel(r.UB));
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& st : r.stages) {
          EXPECT_LE(st.ub, prev + rel(prev));
          prev = st.ub;
        }
        EXPECT_DOUBLE_EQ(r.UB, r.stages.back().ub);
      }
    }
  }
}

TEST(TightenBigM, SparsePair) {
  const BigMBounds b = tighten_big_m(fixtures::sparse_pair(), 1.0, 1, 0.5);
  EXPECT_NEAR(b.upper[0], 1.0, 1e-6);
  EXPECT_NEAR(b.M, 1.0, 1e-6);
}

TEST(TightenBigM, SymmetricFeature) {
  const Dataset d = mirrored_square();
  const double ub = brute_force_fs(d, 1.0, 1).point.objective;
  const BigMBounds b = tighten_big_m(d, 1.0, 1, ub * 1.5);
  EXPECT_NEAR(b.lower[1], -b.upper[1], 1e-6 * (1 + b.upper[1]));
  EXPECT_GT(b.upper[1], 1e-3);
}

TEST(TightenBigM, DominatesOracleAndShrinksWithUb) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Dataset d = fixtures::random_instance(30, 6, 900 + seed, 3);
    for (int B : {1, 2, 4}) {
      const auto fs = brute_force_fs(d, 1.0, B);
      const double opt = fs.point.objective;
      const BigMBounds tight = tighten_big_m(d, 1.0, B, opt);
      const BigMBounds loose = tighten_big_m(d, 1.0, B, 1.2 * opt);
      EXPECT_LE(fs.point.w.lpNorm<Eigen::Infinity>(), tight.M + 1e-7);
      EXPECT_LE(tight.M, loose.M + 1e-7);
      EXPECT_TRUE((tight.lower.array() <= tight.upper.array() + 1e-7).all());
    }
  }
}

TEST(HeuristicProcedure, SparsePairSkipsSecondStage) {
  HeuristicParams p;
  p.strategy = Strategy::kLocalSearch;
  p.k = 0;
  const HeuristicOutcome o = heuristic_procedure(fixtures::sparse_pair(), 1.0, 1, p);
  EXPECT_FALSE(o.second_stage_run);
  EXPECT_NEAR(o.result.UB, 0.5, 1e-7);
  EXPECT_NEAR(o.bounds.M, 1.0, 1e-6);
}

TEST(HeuristicProcedure, KeepsBetterStageAndBoundsOracle) {
  for (unsigned seed = 0; seed < 4; ++seed) {
    const Dataset d = fixtures::random_instance(40, 7, 1000 + seed, 3);
    for (Strategy s : {Strategy::kLocalSearch, Strategy::kKernelSearch}) {
      HeuristicParams p;
      p.strategy = s;
      p.k = 1;
      p.rho = 2;
      const HeuristicOutcome o = heuristic_procedure(d, 1.0, 2, p);
      EXPECT_LE(o.result.UB, o.first_stage.UB);
      if (o.second_stage_ub) {
        EXPECT_LE(o.result.UB, *o.second_stage_ub);
      }
      EXPECT_TRUE(fs_feasible(o.result.point, d, 1.0, 2));
      EXPECT_GE(o.result.UB, brute_force_fs(d, 1.0, 2).point.objective - rel(o.result.UB));
    }
  }
}

TEST(TightenBigM, DegenerateLevelSetStaysValid) {
  // UB equals the relaxation value here, so the level set is nearly a point.
  const BigMBounds b = tighten_big_m(fixtures::dense_pair(), 1.0, 1, 0.5);
  EXPECT_GE(b.M, 1.0 - 1e-6);
  EXPECT_LE(b.M, std::sqrt(2.0 * (0.5 + 1e-7)) + 1e-12);
}
