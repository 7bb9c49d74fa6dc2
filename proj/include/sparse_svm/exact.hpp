#pragma once

#include "sparse_svm/core.hpp"
#include "sparse_svm/heuristics.hpp"
#include "sparse_svm/mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sparse_svm {

enum class MSource { kTightened, kUser };

struct ExactParams {
  int s = 10;  // features added to the binary set per iteration, capped at n
  HeuristicParams heur;
  MSource m_source = MSource::kTightened;
  std::optional<double> M;  // required for kUser
  double gap_stop_percent = 0.01;
  double time_limit_s = 3600.0;
  double sub_time_limit_s = 1800.0;  // per semi-relaxation solve
};

struct ExactIteration {
  int iter = 0;
  std::vector<int> K;
  double sub_lb = 0.0;  // this iteration's semi-relaxation value
  double LB = 0.0;
  double UB = 0.0;
  double gap_percent = 0.0;
  double time_s = 0.0;
  bool revisit_nudge = false;
  std::string note;
};

struct ExactResult {
  MipResult mip;
  double M = 0.0;
  std::vector<ExactIteration> trace;
  std::vector<int> final_K;
};

namespace exact_detail {

inline double percent_gap(double ub, double lb) { return 100.0 * relative_gap(ub, lb); }

inline bool contains(const std::vector<int>& sorted, int j) { return std::binary_search(sorted.begin(), sorted.end(), j); }

}  // namespace exact_detail

/// Alternates semi-relaxations over a growing binary set K (global lower
/// bounds) with heuristic runs ranked by their relaxed indicators (upper
/// bounds), until the percent gap falls below gap_stop_percent.
///
/// K update per iteration: add the first s features not yet in K by
/// descending u - u^2 of the relaxed indicators, and drop the members of K
/// that stayed out of the heuristic support in the last two iterations. When
/// the resulting K was already visited, further ranked features are added
/// until it is new.
inline ExactResult exact_procedure(const Dataset& data, double C, int B, const ExactParams& p) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };
  const int n = static_cast<int>(data.n());
  if (!(C > 0.0)) throw InvalidArgument("C must be positive");
  if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
  if (p.s < 1) throw InvalidArgument("s must be at least 1");
  if (!(p.gap_stop_percent > 0.0)) throw InvalidArgument("gap stop must be positive");
  if (p.m_source == MSource::kUser && !(p.M && *p.M > 0.0)) throw InvalidArgument("user M must be positive");

  ExactResult out;
  HeuristicParams hp = p.heur;
  hp.mip.time_limit_s = std::min(hp.mip.time_limit_s, p.time_limit_s);

  // Initial upper bound and M.
  HeuristicResult start;
  if (p.m_source == MSource::kTightened) {
    HeuristicOutcome h = heuristic_procedure(data, C, B, hp);
    start = h.result;
    out.M = h.result.UB < h.first_stage.UB ? tighten_big_m(data, C, B, h.result.UB, hp.mip.ipm).M : h.bounds.M;
  } else {
    start = run_strategy(data, C, B, hp, std::nullopt);
    out.M = *p.M;
  }
  PrimalPoint best = start.point;
  double UB = best.objective;
  double LB = -std::numeric_limits<double>::infinity();
  std::vector<int> K = start.selected;
  std::sort(K.begin(), K.end());

  // Supports of the last two heuristic incumbents, most recent first.
  std::vector<std::vector<int>> recent{start.selected};
  std::set<std::vector<int>> visited;
  long nodes = 0;
  bool time_out = false;

  for (int iter = 1;; ++iter) {
    visited.insert(K);
    const double left = p.time_limit_s - elapsed();
    if (left <= 0.0) {
      time_out = true;
      break;
    }
    ExactIteration rec;
    rec.iter = iter;
    rec.K = K;
    MipOptions so = hp.mip;
    so.time_limit_s = std::min(p.sub_time_limit_s, left);
    const SrDlmpResult sr = solve_sr_dlmp(data, C, B, K, out.M, so, UB);
    nodes += sr.mip.nodes_explored;
    rec.sub_lb = sr.mip.LB;
    if (std::isfinite(sr.mip.LB)) LB = std::max(LB, std::min(sr.mip.LB, UB));
    if (sr.mip.status == MipStatus::kTimeLimit) rec.note = "semi-relaxation hit its time limit";
    const bool full_solved = static_cast<int>(K.size()) == n && sr.mip.status == MipStatus::kOptimal;
    if (full_solved && sr.mip.UB < UB) {
      // All indicators binary: the semi-relaxation is exact and its u is a support.
      std::vector<int> S;
      for (int j = 0; j < n; ++j)
        if (sr.relaxed_u[j] < 0.5) S.push_back(j);
      if (static_cast<int>(S.size()) <= B) {
        const PrimalPoint q = solve_svm(data, C, S, hp.mip.ipm);
        if (q.objective < UB) {
          best = q;
          UB = q.objective;
        }
      }
    }

    // Upper bound from the heuristic ranked by the relaxed indicators.
    if (exact_detail::percent_gap(UB, LB) >= p.gap_stop_percent && elapsed() < p.time_limit_s) {
      try {
        HeuristicParams hi = hp;
        hi.mip.time_limit_s = std::min(hi.mip.time_limit_s, std::max(1e-3, p.time_limit_s - elapsed()));
        const HeuristicResult h = run_strategy(data, C, B, hi, sr.relaxed_u);
        if (h.UB < UB) {
          best = h.point;
          UB = h.UB;
        }
        recent.insert(recent.begin(), h.selected);
        if (recent.size() > 2) recent.pop_back();
      } catch (const Error& e) {
        rec.note += std::string(rec.note.empty() ? "" : "; ") + "heuristic failed: " + e.what();
      }
    }
    LB = std::min(LB, UB);
    rec.LB = LB;
    rec.UB = UB;
    rec.gap_percent = exact_detail::percent_gap(UB, LB);

    const bool done = rec.gap_percent < p.gap_stop_percent;
    if (!done) {
      // Next binary set.
      const RankedFeatures rank = rank_least_binary(sr.relaxed_u);
      std::vector<int> next;
      for (int j : K) {
        bool used = false;
        for (const auto& sup : recent) used = used || exact_detail::contains(sup, j);
        if (used || recent.size() < 2) next.push_back(j);
      }
      auto pos = rank.order.begin();
      int added = 0;
      const auto take = [&] {
        for (; pos != rank.order.end(); ++pos)
          if (!exact_detail::contains(K, *pos) && std::find(next.begin(), next.end(), *pos) == next.end()) {
            next.push_back(*pos++);
            return true;
          }
        return false;
      };
      while (added < std::min(p.s, n) && take()) ++added;
      std::sort(next.begin(), next.end());
      while (visited.count(next)) {
        rec.revisit_nudge = true;
        if (!take()) {
          next = svm_detail::all_features(n);
          break;
        }
        std::sort(next.begin(), next.end());
      }
      K = std::move(next);
    }
    rec.time_s = elapsed();
    out.trace.push_back(rec);
    if (done || full_solved) break;
  }

  out.final_K = K;
  out.mip.incumbent = best;
  out.mip.UB = UB;
  out.mip.LB = LB;
  out.mip.nodes_explored = nodes;
  out.mip.refresh_gap();
  out.mip.status = !time_out && exact_detail::percent_gap(UB, LB) < p.gap_stop_percent ? MipStatus::kGapStop
                                                                                         : MipStatus::kTimeLimit;
  out.mip.wall_time_s = elapsed();
  return out;
}

}  // namespace sparse_svm
