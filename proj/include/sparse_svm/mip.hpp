#pragma once

#include "sparse_svm/conicqp/ipm.hpp"
#include "sparse_svm/core.hpp"
#include "sparse_svm/relaxations.hpp"
#include "sparse_svm/svm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace sparse_svm {

enum class Formulation { kComplementarity, kBigM };

struct BranchSpec {
  std::vector<int> K;
  Formulation formulation = Formulation::kComplementarity;
  std::optional<double> M;
  /// Only solutions with objective <= cutoff are wanted.
  std::optional<double> extra_ub_cutoff;
  /// At least one feature of this set must be selected.
  std::vector<int> cover_set;
};

struct BranchNode {
  std::vector<int> fixed_zero;
  std::vector<int> fixed_one;
  double relaxation_bound = -std::numeric_limits<double>::infinity();
  int depth = 0;
};

struct MipOptions {
  double time_limit_s = 3600.0;
  double eps_rel_gap = 1e-6;
  conicqp::IpmSettings ipm;
  long max_nodes = std::numeric_limits<long>::max();
  /// One line per processed node: depth, bound, fixings.
  std::ostream* node_log = nullptr;
};

struct SrDlmpResult {
  MipResult mip;
  Eigen::VectorXd relaxed_u;
};

namespace mip_detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Node {
  Fixings fix;
  double bound;
  int depth;
  long id;
  long parent;
};

// Indicator values closer than this are treated as ties.
inline constexpr double kTieTol = 1e-6;

// Sort key on a kTieTol grid, so that ordering stays a strict weak order.
inline long long tie_key(double v) { return std::llround(v / kTieTol); }

/// Deduces forced fixings from the budget and cover rows. Returns false when
/// the node cannot be feasible.
inline bool propagate(const IndicatorModelSpec& spec, Fixings& fix) {
  const double eps = 1e-9;
  for (int pass = 0; pass < 4; ++pass) {
    int ones = 0, zeros = 0;
    std::vector<int> free_bin;
    for (int j : spec.active) {
      const signed char f = fix[static_cast<std::size_t>(j)];
      if (f == 1) ++ones;
      else if (f == 0) ++zeros;
      else if (spec.binary[static_cast<std::size_t>(j)]) free_bin.push_back(j);
    }
    const double min_u = ones;
    const double max_u = static_cast<double>(spec.active.size()) - zeros;
    if (spec.budget < min_u - eps || spec.budget > max_u + eps) return false;
    bool changed = false;
    if (!free_bin.empty() && std::abs(spec.budget - min_u) <= eps) {
      for (int j : free_bin) fix[static_cast<std::size_t>(j)] = 0;
      changed = true;
    } else if (!free_bin.empty() && std::abs(spec.budget - max_u) <= eps) {
      for (int j : free_bin) fix[static_cast<std::size_t>(j)] = 1;
      changed = true;
    }
    if (!spec.cover.empty()) {
      int open = 0, last_open = -1;
      bool selected = false;
      for (int j : spec.cover) {
        if (!std::binary_search(spec.active.begin(), spec.active.end(), j)) continue;
        const signed char f = fix[static_cast<std::size_t>(j)];
        if (f == 0) selected = true;
        if (f != 1) {
          ++open;
          last_open = j;
        }
      }
      if (open == 0) return false;
      if (!selected && open == 1 && spec.binary[static_cast<std::size_t>(last_open)] &&
          fix[static_cast<std::size_t>(last_open)] != 0) {
        fix[static_cast<std::size_t>(last_open)] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return true;
}

/// Branch and bound over the binary u of an IndicatorModel.
///
/// With `fs_incumbents` every integral node defines a feasible point of the
/// budgeted SVM (CoP/BigM family): it is polished by a restricted SVM solve
/// and kept as incumbent. Otherwise (semi-relaxation) an integral node only
/// contributes its relaxation value as an upper bound on the MIP optimum.
class BranchAndBound {
 public:
  BranchAndBound(const IndicatorModel& model, int B, const MipOptions& opt, std::optional<double> cutoff,
                 bool fs_incumbents)
      : model_(model), B_(B), opt_(opt), cutoff_(cutoff), fs_(fs_incumbents) {
    for (int j : model.spec().active)
      if (model.spec().binary[static_cast<std::size_t>(j)]) branched_.push_back(j);
  }

  MipResult run() {
    t0_ = Clock::now();
    MipResult res;
    res.branched = branched_;
    const auto n = model_.data().n();
    std::vector<Node> open;
    Node root{Fixings(static_cast<std::size_t>(n), -1), -std::numeric_limits<double>::infinity(), 0, 0, -1};
    long next_id = 1;
    bool time_out = false;
    double stop_lb = kInfinity;
    if (propagate(model_.spec(), root.fix)) open.push_back(std::move(root));

    while (!open.empty()) {
      if (seconds_since(t0_) > opt_.time_limit_s || res.nodes_explored >= opt_.max_nodes) {
        time_out = true;
        break;
      }
      const std::size_t pick = select(open, res.incumbent.has_value() || best_value_ < kInfinity);
      Node node = std::move(open[pick]);
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
      if (node.bound > prune_level()) continue;
      ++res.nodes_explored;

      const auto outcome = process(node, res);
      if (outcome.time_out) {
        open.push_back(std::move(node));
        time_out = true;
        break;
      }
      if (opt_.node_log) log(node, outcome.bound);
      if (!outcome.branch_on) continue;

      const int j = *outcome.branch_on;
      const bool up_first = outcome.branch_value > 0.5 + kTieTol;
      for (int child = 0; child < 2; ++child) {
        const signed char v = (child == 0) == up_first ? 1 : 0;
        Node c{node.fix, outcome.bound, node.depth + 1, next_id++, node.id};
        c.fix[static_cast<std::size_t>(j)] = v;
        if (propagate(model_.spec(), c.fix)) children_.push_back(std::move(c));
      }
      // Depth-first order takes the rounding-direction child first, so it goes on top.
      for (auto it = children_.rbegin(); it != children_.rend(); ++it) open.push_back(std::move(*it));
      children_.clear();

      const double lb = open_bound(open);
      if (best_value_ < kInfinity && relative_gap(best_value_, lb) <= opt_.eps_rel_gap) {
        stop_lb = lb;
        open.clear();
        break;
      }
    }

    res.wall_time_s = seconds_since(t0_);
    if (time_out) {
      res.LB = std::min(open_bound(open), best_value_);
      res.UB = best_value_;
      res.status = MipStatus::kTimeLimit;
    } else if (best_value_ < kInfinity) {
      res.UB = best_value_;
      res.LB = std::min(best_value_, stop_lb);
      res.status = MipStatus::kOptimal;
    } else {
      res.status = MipStatus::kInfeasible;
      res.LB = cutoff_ ? *cutoff_ : kInfinity;
    }
    if (best_u_.size() > 0) {
      Eigen::VectorXd a(static_cast<Eigen::Index>(branched_.size()));
      for (std::size_t k = 0; k < branched_.size(); ++k) a[static_cast<Eigen::Index>(k)] = best_u_[branched_[k]];
      res.binary_assignment = a;
    }
    res.refresh_gap();
    return res;
  }

  const Eigen::VectorXd& best_relaxed_u() const { return best_u_.size() ? best_u_ : root_u_; }
  const Eigen::VectorXd& root_u() const { return root_u_; }

 private:
  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  struct Outcome {
    double bound = kInfinity;
    std::optional<int> branch_on;
    double branch_value = 0.0;
    bool time_out = false;
  };

  double tol(double v) const { return 1e-7 * std::max(1.0, std::abs(v)); }

  // Nodes whose bound exceeds this level cannot matter.
  double prune_level() const {
    double level = kInfinity;
    if (cutoff_) level = *cutoff_ + tol(*cutoff_);
    if (best_value_ < kInfinity)
      level = std::min(level, best_value_ - opt_.eps_rel_gap * std::max(std::abs(best_value_), 1e-12));
    return level;
  }

  static double open_bound(const std::vector<Node>& open) {
    double lb = kInfinity;
    for (const auto& nd : open) lb = std::min(lb, nd.bound);
    return lb;
  }

  std::size_t select(const std::vector<Node>& open, bool have_incumbent) const {
    if (!have_incumbent) return open.size() - 1;
    std::size_t best = 0;
    for (std::size_t i = 1; i < open.size(); ++i)
      if (open[i].bound < open[best].bound || (open[i].bound == open[best].bound && open[i].id < open[best].id))
        best = i;
    return best;
  }

  double remaining() const { return opt_.time_limit_s - seconds_since(t0_); }

  std::vector<int> selected_set(const Fixings& fix, const Eigen::VectorXd& u) const {
    std::vector<int> s;
    for (int j : model_.spec().active) {
      const signed char f = fix[static_cast<std::size_t>(j)];
      if (f == 0 || (f == -1 && u[j] < 0.5)) s.push_back(j);
    }
    return s;
  }

  void offer_incumbent(const std::vector<int>& S, MipResult& res) {
    if (static_cast<int>(S.size()) > B_) return;
    conicqp::IpmSettings ipm = opt_.ipm;
    ipm.time_limit_s = std::max(1.0, remaining());
    PrimalPoint p;
    try {
      p = solve_svm(model_.data(), model_.C(), S, ipm);
    } catch (const SolveFailed&) {
      return;
    }
    if (cutoff_ && p.objective > *cutoff_ + tol(*cutoff_)) return;
    // Compare (objective, support) so equal-valued supports resolve to the
    // lexicographically smallest one.
    const bool better = p.objective < best_value_ - tol(best_value_) ||
                        (p.objective <= best_value_ + tol(best_value_) && p.support < best_support_);
    if (!res.incumbent || better) {
      best_value_ = p.objective;
      Eigen::VectorXd uu = Eigen::VectorXd::Ones(model_.data().n());
      for (int j : S) uu[j] = 0.0;
      best_u_ = uu;
      best_support_ = p.support;
      res.incumbent = p;
    }
  }

  // Rounding: the B features with the smallest u (fixings respected), the
  // cover row satisfied by swapping in its smallest-u member.
  void round_and_offer(const Fixings& fix, const Eigen::VectorXd& u, MipResult& res) {
    const auto& spec = model_.spec();
    std::vector<int> order;
    for (int j : spec.active)
      if (fix[static_cast<std::size_t>(j)] != 1) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const bool fa = fix[static_cast<std::size_t>(a)] == 0, fb = fix[static_cast<std::size_t>(b)] == 0;
      if (fa != fb) return fa;
      return tie_key(u[a]) < tie_key(u[b]);
    });
    const std::size_t want = static_cast<std::size_t>(
        std::max(0.0, static_cast<double>(spec.active.size()) - spec.budget));
    if (order.size() < want) return;
    std::vector<int> S(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want));
    if (!spec.cover.empty()) {
      bool hit = false;
      for (int j : S) hit = hit || std::find(spec.cover.begin(), spec.cover.end(), j) != spec.cover.end();
      if (!hit) {
        int best_in = -1;
        for (int j : order)
          if (std::find(spec.cover.begin(), spec.cover.end(), j) != spec.cover.end()) {
            best_in = j;
            break;
          }
        if (best_in < 0 || S.empty()) return;
        // Replace the last free member.
        for (auto it = S.rbegin(); it != S.rend(); ++it)
          if (fix[static_cast<std::size_t>(*it)] != 0) {
            *it = best_in;
            hit = true;
            break;
          }
        if (!hit) return;
      }
    }
    std::sort(S.begin(), S.end());
    offer_incumbent(S, res);
  }

  Outcome process(Node& node, MipResult& res) {
    Outcome out;
    const auto& spec = model_.spec();
    const auto n = model_.data().n();

    bool all_fixed = true;
    for (int j : branched_) all_fixed = all_fixed && node.fix[static_cast<std::size_t>(j)] != -1;
    bool pure = fs_;
    for (int j : spec.active) pure = pure && spec.binary[static_cast<std::size_t>(j)];

    // A fully fixed node of the pure binary family is a restricted SVM.
    if (pure && all_fixed) {
      Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
      std::vector<int> S;
      for (int j : spec.active)
        if (node.fix[static_cast<std::size_t>(j)] == 0) {
          S.push_back(j);
          u[j] = 0.0;
        }
      offer_incumbent(S, res);
      out.bound = kInfinity;
      return out;
    }

    conicqp::IpmSettings ipm = opt_.ipm;
    ipm.time_limit_s = std::max(1e-3, remaining());
    const auto sol = conicqp::solve(model_.build(node.fix), ipm);
    if (sol.status == conicqp::ConicStatus::kTimeLimit) {
      out.time_out = true;
      return out;
    }
    if (sol.status == conicqp::ConicStatus::kInfeasible) return out;

    Eigen::VectorXd u;
    double bound = node.bound;
    if (sol.optimal()) {
      const RelaxationSolution r = model_.extract(sol);
      u = r.indicator.values;
      bound = std::max(bound, r.lower_bound);
    } else {
      // No certified value: keep the parent's bound and branch on the first free index.
      u = Eigen::VectorXd::Constant(n, 0.5);
      if (sol.x.size() > 0) u = model_.extract(sol).indicator.values;
      if (all_fixed) {
        if (!fs_) throw SolveFailed("node relaxation", sol.status);
        return out;
      }
    }
    out.bound = bound;
    node.bound = bound;
    if (node.depth == 0) root_u_ = u;
    if (bound > prune_level()) return out;

    if (fs_ && (res.nodes_explored == 1 || res.nodes_explored % 10 == 0)) round_and_offer(node.fix, u, res);

    // Most fractional free binary, ties to the smallest index.
    int pick = -1;
    double best_score = 2.0;
    for (int j : branched_) {
      if (node.fix[static_cast<std::size_t>(j)] != -1) continue;
      const double score = sol.optimal() ? std::abs(u[j] - 0.5) : 0.0;
      if (sol.optimal() && std::min(u[j], 1.0 - u[j]) <= 1e-6) continue;
      if (score < best_score - kTieTol) {
        best_score = score;
        pick = j;
      }
    }
    if (pick < 0) {
      // Integral on the branched set.
      if (fs_) {
        offer_incumbent(selected_set(node.fix, u), res);
      } else if (bound < best_value_) {
        best_value_ = bound;
        best_u_ = u;
        for (int j : branched_) best_u_[j] = std::round(best_u_[j]);
      }
      return out;
    }
    out.branch_on = pick;
    out.branch_value = u[pick];
    return out;
  }

  void log(const Node& node, double bound) const {
    *opt_.node_log << "node id=" << node.id << " parent=" << node.parent << " depth=" << node.depth
                   << " bound=" << bound << " zero={";
    bool first = true;
    for (int j : branched_)
      if (node.fix[static_cast<std::size_t>(j)] == 0) {
        *opt_.node_log << (first ? "" : ",") << j;
        first = false;
      }
    *opt_.node_log << "} one={";
    first = true;
    for (int j : branched_)
      if (node.fix[static_cast<std::size_t>(j)] == 1) {
        *opt_.node_log << (first ? "" : ",") << j;
        first = false;
      }
    *opt_.node_log << "}\n";
  }

  const IndicatorModel& model_;
  int B_;
  MipOptions opt_;
  std::optional<double> cutoff_;
  bool fs_;
  std::vector<int> branched_;
  std::vector<Node> children_;
  double best_value_ = kInfinity;
  Eigen::VectorXd best_u_;
  std::vector<int> best_support_;
  Eigen::VectorXd root_u_;
  Clock::time_point t0_;
};

inline std::vector<int> sorted_unique(std::vector<int> v, Eigen::Index n) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  for (int j : v)
    if (j < 0 || j >= n) throw InvalidArgument("feature index out of range");
  return v;
}

}  // namespace mip_detail

/// Budgeted SVM restricted to the features in spec.K: features outside K are
/// zero and sum_{j in K} u_j = max(|K| - B, 0). The complementarity
/// formulation uses perspective cones; the big-M one uses |w_j| <= M (1 - u_j).
inline MipResult solve_cop_restricted(const Dataset& data, double C, int B, const BranchSpec& spec,
                                      const MipOptions& opt = {}) {
  const auto n = data.n();
  if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
  IndicatorModelSpec ms;
  ms.active = mip_detail::sorted_unique(spec.K, n);
  if (ms.active.empty()) throw InvalidArgument("restricted problem needs a nonempty K");
  ms.budget = std::max(0, static_cast<int>(ms.active.size()) - B);
  ms.binary.assign(static_cast<std::size_t>(n), true);
  if (spec.formulation == Formulation::kBigM) {
    if (!spec.M) throw InvalidArgument("big-M formulation needs M");
    ms.big_m.assign(static_cast<std::size_t>(n), true);
    ms.M = spec.M;
  } else {
    ms.perspective.assign(static_cast<std::size_t>(n), true);
  }
  ms.cover = mip_detail::sorted_unique(spec.cover_set, n);
  IndicatorModel model(data, C, ms);
  mip_detail::BranchAndBound bb(model, B, opt, spec.extra_ub_cutoff, true);
  return bb.run();
}

inline void check_full_guard(const Dataset& data, int max_n) {
  if (data.n() > max_n)
    throw GuardExceeded("full branch and bound limited to n <= " + std::to_string(max_n));
}

/// Big-M model over all features.
inline MipResult solve_bigmp_full(const Dataset& data, double C, int B, double M, const MipOptions& opt = {},
                                  int max_n = 64) {
  check_full_guard(data, max_n);
  BranchSpec spec;
  spec.K = svm_detail::all_features(data.n());
  spec.formulation = Formulation::kBigM;
  spec.M = M;
  return solve_cop_restricted(data, C, B, spec, opt);
}

/// Complementarity (perspective) model over all features; needs no M.
inline MipResult solve_cop_full(const Dataset& data, double C, int B, const MipOptions& opt = {}, int max_n = 64) {
  check_full_guard(data, max_n);
  BranchSpec spec;
  spec.K = svm_detail::all_features(data.n());
  return solve_cop_restricted(data, C, B, spec, opt);
}

/// Semi-relaxation: u binary on K with |w_j| <= M (1 - u_j), continuous
/// perspective coupling (1 - u_j) W_j >= w_j^2 elsewhere. Its optimum is a
/// lower bound on the budgeted SVM. The perspective cone is kept on K as
/// well; at integral u it coincides with W_j >= w_j^2 under the big-M row,
/// so the optimum is unchanged while node relaxations get tighter.
///
/// With `cutoff` (a known upper bound on the budgeted SVM), subtrees above it
/// are pruned and LB = min(optimum, cutoff).
inline SrDlmpResult solve_sr_dlmp(const Dataset& data, double C, int B, const std::vector<int>& K, double M,
                                  const MipOptions& opt = {}, std::optional<double> cutoff = std::nullopt) {
  const auto n = data.n();
  if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
  if (!(M > 0.0)) throw InvalidArgument("M must be positive");
  IndicatorModelSpec ms;
  ms.active = svm_detail::all_features(n);
  ms.budget = static_cast<double>(n - B);
  ms.perspective.assign(static_cast<std::size_t>(n), true);
  ms.big_m.assign(static_cast<std::size_t>(n), false);
  ms.binary.assign(static_cast<std::size_t>(n), false);
  ms.M = M;
  for (int j : mip_detail::sorted_unique(K, n)) {
    ms.big_m[static_cast<std::size_t>(j)] = true;
    ms.binary[static_cast<std::size_t>(j)] = true;
  }
  IndicatorModel model(data, C, ms);
  mip_detail::BranchAndBound bb(model, B, opt, cutoff, false);
  SrDlmpResult out;
  out.mip = bb.run();
  if (cutoff && out.mip.status == MipStatus::kInfeasible) {
    // Everything was above the cutoff: the cutoff itself is the bound.
    out.mip.status = MipStatus::kOptimal;
    out.mip.LB = *cutoff;
    out.mip.UB = *cutoff;
    out.mip.refresh_gap();
  } else if (cutoff && out.mip.status == MipStatus::kOptimal && out.mip.UB > *cutoff) {
    out.mip.LB = out.mip.UB = *cutoff;
    out.mip.refresh_gap();
  } else if (cutoff && out.mip.status == MipStatus::kTimeLimit) {
    out.mip.LB = std::min(out.mip.LB, *cutoff);
    out.mip.refresh_gap();
  }
  out.relaxed_u = bb.best_relaxed_u();
  if (out.relaxed_u.size() == 0) out.relaxed_u = Eigen::VectorXd::Constant(n, static_cast<double>(n - B) / n);
  return out;
}

}  // namespace sparse_svm
