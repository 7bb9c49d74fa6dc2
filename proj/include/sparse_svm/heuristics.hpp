#pragma once

#include "sparse_svm/core.hpp"
#include "sparse_svm/mip.hpp"
#include "sparse_svm/relaxations.hpp"
#include "sparse_svm/svm.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace sparse_svm {

/// A permutation of the features together with the key it was sorted by.
struct RankedFeatures {
  std::vector<int> order;
  Eigen::VectorXd key;
};

/// Ascending key, ties (within 1e-6) to the smaller index.
inline RankedFeatures rank_ascending(const Eigen::VectorXd& key) {
  RankedFeatures r{std::vector<int>(static_cast<std::size_t>(key.size())), key};
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
    return mip_detail::tie_key(key[a]) < mip_detail::tie_key(key[b]);
  });
  return r;
}

/// Descending u - u^2: the least binary indicators first, ties (within 1e-6)
/// to the smaller index.
inline RankedFeatures rank_least_binary(const Eigen::VectorXd& u) {
  RankedFeatures r{std::vector<int>(static_cast<std::size_t>(u.size())),
                   (u.array() - u.array().square()).matrix()};
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
    return mip_detail::tie_key(r.key[a]) > mip_detail::tie_key(r.key[b]);
  });
  return r;
}

enum class Strategy { kLocalSearch, kKernelSearch };

inline const char* to_string(Strategy s) { return s == Strategy::kLocalSearch ? "LS" : "KS"; }

struct HeuristicParams {
  Strategy strategy = Strategy::kKernelSearch;
  int k = 10;     // local search: |K| = B + k
  int rho = 10;   // kernel search bucket size
  double sub_time_limit_s = 60.0;
  MipOptions mip;
};

/// One subproblem solve inside a heuristic run.
struct HeuristicStage {
  std::string name;
  std::vector<int> K;
  MipStatus status = MipStatus::kInfeasible;
  std::optional<double> objective;
  double ub = std::numeric_limits<double>::infinity();  // best value after this stage
  double time_s = 0.0;
};

struct HeuristicResult {
  PrimalPoint point;
  double UB = std::numeric_limits<double>::infinity();
  std::vector<int> selected;
  std::vector<HeuristicStage> stages;
  /// Deselection indicators the ranking came from.
  Eigen::VectorXd ranking_u;
};

namespace heur_detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline Eigen::VectorXd relaxation_u(const Dataset& data, double C, int B, const std::optional<Eigen::VectorXd>& u,
                                    const conicqp::IpmSettings& ipm) {
  if (u) {
    if (u->size() != data.n()) throw DimensionMismatch("relaxed indicator vector has wrong length");
    return *u;
  }
  return solve_dscop(data, C, B, ipm).indicator.as_deselect();
}

// A point that is always feasible: the restricted SVM on the first B ranked features.
inline PrimalPoint ranked_fallback(const Dataset& data, double C, int B, const RankedFeatures& rank,
                                   const conicqp::IpmSettings& ipm) {
  std::vector<int> S(rank.order.begin(), rank.order.begin() + B);
  std::sort(S.begin(), S.end());
  return solve_svm(data, C, S, ipm);
}

inline MipOptions capped(const MipOptions& opt, double limit) {
  MipOptions o = opt;
  o.time_limit_s = std::min(o.time_limit_s, limit);
  return o;
}

}  // namespace heur_detail

/// Restricted complementarity problem over the B + k features with the
/// smallest relaxed u (computed by DSCoP when not supplied).
inline HeuristicResult local_search(const Dataset& data, double C, int B, int k,
                                    const std::optional<Eigen::VectorXd>& relax_u = std::nullopt,
                                    const MipOptions& opt = {}) {
  const auto n = static_cast<int>(data.n());
  if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
  if (k < 0 || k > n - B) throw InvalidArgument("k must lie in [0, n - B]");
  const auto t0 = std::chrono::steady_clock::now();
  HeuristicResult out;
  out.ranking_u = heur_detail::relaxation_u(data, C, B, relax_u, opt.ipm);
  const RankedFeatures rank = rank_ascending(out.ranking_u);

  BranchSpec spec;
  spec.K.assign(rank.order.begin(), rank.order.begin() + B + k);
  std::sort(spec.K.begin(), spec.K.end());
  const MipResult r = solve_cop_restricted(data, C, B, spec, opt);

  HeuristicStage st{"local_search", spec.K, r.status, std::nullopt, conicqp::kInf, 0.0};
  if (r.incumbent) {
    out.point = *r.incumbent;
  } else {
    out.point = heur_detail::ranked_fallback(data, C, B, rank, opt.ipm);
  }
  if (r.incumbent) st.objective = r.incumbent->objective;
  out.UB = out.point.objective;
  out.selected = out.point.support;
  st.ub = out.UB;
  st.time_s = heur_detail::seconds_since(t0);
  out.stages.push_back(std::move(st));
  return out;
}

/// Sizes of the kernel-search buckets: ceil(n / rho) buckets of size rho, the
/// last one holding the remainder.
inline std::vector<std::vector<int>> make_buckets(const std::vector<int>& order, int rho) {
  if (rho < 1) throw InvalidArgument("bucket size must be at least 1");
  std::vector<std::vector<int>> buckets;
  for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(rho))
    buckets.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), s + rho)));
  return buckets;
}

/// Kernel search: features ranked by relaxed u are processed bucket by
/// bucket. Each step solves CoP(kernel + bucket) asking for a value no worse
/// than the current UB and at least one feature from the bucket. Bucket
/// features that end up in the support join the kernel; kernel features
/// unused in the last two successful steps leave it.
inline HeuristicResult kernel_search(const Dataset& data, double C, int B, int rho, double sub_time_limit_s = 60.0,
                                     const std::optional<Eigen::VectorXd>& relax_u = std::nullopt,
                                     const MipOptions& opt = {}) {
  const auto n = static_cast<int>(data.n());
  if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
  if (rho < 1 || rho > n) throw InvalidArgument("rho must lie in [1, n]");
  if (!(sub_time_limit_s > 0.0)) throw InvalidArgument("subproblem time limit must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  HeuristicResult out;
  out.ranking_u = heur_detail::relaxation_u(data, C, B, relax_u, opt.ipm);
  const RankedFeatures rank = rank_ascending(out.ranking_u);
  const auto buckets = make_buckets(rank.order, rho);

  std::vector<int> kernel;
  // Per kernel feature: was it in the support in each of the last two
  // successful steps (most recent first)?
  std::vector<std::array<int, 2>> history(static_cast<std::size_t>(n), {-1, -1});
  std::optional<PrimalPoint> best;

  for (std::size_t it = 0; it < buckets.size(); ++it) {
    const double left = opt.time_limit_s - heur_detail::seconds_since(t0);
    if (left <= 0.0) break;
    BranchSpec spec;
    spec.K = kernel;
    spec.K.insert(spec.K.end(), buckets[it].begin(), buckets[it].end());
    std::sort(spec.K.begin(), spec.K.end());
    spec.cover_set = buckets[it];
    std::sort(spec.cover_set.begin(), spec.cover_set.end());
    if (best) spec.extra_ub_cutoff = best->objective;
    const auto ts = std::chrono::steady_clock::now();
    const MipResult r = solve_cop_restricted(data, C, B, spec, heur_detail::capped(opt, std::min(sub_time_limit_s, left)));

    HeuristicStage st{"bucket " + std::to_string(it + 1) + "/" + std::to_string(buckets.size()), spec.K, r.status,
                      std::nullopt, conicqp::kInf, 0.0};
    if (r.incumbent) {
      const PrimalPoint& p = *r.incumbent;
      st.objective = p.objective;
      // Equal values (up to rounding) still move the incumbent to the new support.
      if (!best || p.objective <= best->objective + 1e-9 * std::max(1.0, std::abs(best->objective))) best = p;
      for (int j : buckets[it])
        if (std::binary_search(p.support.begin(), p.support.end(), j)) kernel.push_back(j);
      std::vector<int> kept;
      for (int j : kernel) {
        auto& h = history[static_cast<std::size_t>(j)];
        h = {std::binary_search(p.support.begin(), p.support.end(), j) ? 1 : 0, h[0]};
        if (!(h[0] == 0 && h[1] == 0)) kept.push_back(j);
      }
      kernel = std::move(kept);
      std::sort(kernel.begin(), kernel.end());
    }
    st.ub = best ? best->objective : conicqp::kInf;
    st.time_s = heur_detail::seconds_since(ts);
    out.stages.push_back(std::move(st));
  }

  out.point = best ? *best : heur_detail::ranked_fallback(data, C, B, rank, opt.ipm);
  out.UB = out.point.objective;
  out.selected = out.point.support;
  return out;
}

/// Per-feature bounds on w over the conic relaxation intersected with the
/// level set {objective <= UB}, and M = max_j max(|upper_j|, |lower_j|).
struct BigMBounds {
  double M = 0.0;
  Eigen::VectorXd upper;
  Eigen::VectorXd lower;
};

/// Since every budgeted-SVM solution with value <= UB lies in that set, M
/// bounds the weights of every such solution. Each bound comes from the dual
/// side of its conic solve, so it is valid up to solver tolerance. Bounds are
/// clipped to sqrt(2 UB), which the objective term ||w||^2 / 2 <= UB implies;
/// a bound solve that does not reach optimality falls back to that cap.
inline BigMBounds tighten_big_m(const Dataset& data, double C, int B, double UB, const conicqp::IpmSettings& ipm = {}) {
  const auto n = static_cast<int>(data.n());
  if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
  if (!std::isfinite(UB)) throw InvalidArgument("UB must be finite");
  IndicatorModelSpec spec = relax_detail::full_spec(n, B);
  spec.perspective.assign(static_cast<std::size_t>(n), true);
  const IndicatorModel model(data, C, spec);
  conicqp::ConicProgram base = model.build();
  // Objective becomes a row; the relative slack keeps the level set with a
  // nonempty interior when UB equals the relaxation value.
  std::vector<conicqp::LinearTerm> level;
  for (int v = 0; v < base.num_vars(); ++v) {
    if (base.cost()[v] != 0.0) level.push_back({v, base.cost()[v]});
    base.set_cost(v, 0.0);
  }
  const double level_ub = UB + 1e-7 * std::max(1.0, std::abs(UB));
  base.add_row(level, conicqp::RowSense::kLessEqual, level_ub - base.offset());
  base.set_offset(0.0);
  const double cap = std::sqrt(2.0 * std::max(level_ub, 0.0));

  BigMBounds out;
  out.upper = Eigen::VectorXd::Zero(n);
  out.lower = Eigen::VectorXd::Zero(n);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto work = [&] {
    for (int t = next++; t < 2 * n; t = next++) {
      const int j = t / 2;
      const double sign = t % 2 == 0 ? -1.0 : 1.0;  // minimize -w_j, then w_j
      try {
        conicqp::ConicProgram p = base;
        p.set_cost(model.position(j), sign);
        const auto sol = conicqp::solve(p, ipm);
        if (t % 2 == 0)
          out.upper[j] = sol.optimal() ? std::min(-sol.lower_bound(), cap) : cap;
        else
          out.lower[j] = sol.optimal() ? std::max(sol.lower_bound(), -cap) : -cap;
      } catch (...) {
        std::lock_guard<std::mutex> g(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::min(static_cast<int>(worker_threads()), 2 * n);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  out.M = std::max({out.upper.cwiseAbs().maxCoeff(), out.lower.cwiseAbs().maxCoeff(), 1e-8});
  return out;
}

struct HeuristicOutcome {
  HeuristicResult result;       // the better of the two stages
  HeuristicResult first_stage;
  BigMBounds bounds;
  bool second_stage_run = false;
  std::optional<double> second_stage_ub;
};

inline HeuristicResult run_strategy(const Dataset& data, double C, int B, const HeuristicParams& p,
                                    const std::optional<Eigen::VectorXd>& relax_u) {
  if (p.strategy == Strategy::kLocalSearch)
    return local_search(data, C, B, std::min(p.k, static_cast<int>(data.n()) - B), relax_u, p.mip);
  return kernel_search(data, C, B, std::min(p.rho, static_cast<int>(data.n())), p.sub_time_limit_s, relax_u, p.mip);
}

/// Strategy run, big-M tightening from its UB, and, when the tightened M is
/// below ||w_svm||_1 / B, a second run ranked by the big-M conic relaxation.
/// The better incumbent is kept.
inline HeuristicOutcome heuristic_procedure(const Dataset& data, double C, int B, const HeuristicParams& p) {
  HeuristicOutcome out;
  out.first_stage = run_strategy(data, C, B, p, std::nullopt);
  out.result = out.first_stage;
  out.bounds = tighten_big_m(data, C, B, out.first_stage.UB, p.mip.ipm);
  const double l1_share = solve_svm(data, C, std::nullopt, p.mip.ipm).w.lpNorm<1>() / B;
  if (out.bounds.M < l1_share) {
    out.second_stage_run = true;
    const Eigen::VectorXd u = solve_dscomp(data, C, B, out.bounds.M, p.mip.ipm).indicator.as_deselect();
    HeuristicResult second = run_strategy(data, C, B, p, u);
    out.second_stage_ub = second.UB;
    if (second.UB <= out.result.UB) out.result = std::move(second);
  }
  return out;
}

}  // namespace sparse_svm
