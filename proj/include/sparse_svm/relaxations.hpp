#pragma once

#include "sparse_svm/conicqp/ipm.hpp"
#include "sparse_svm/core.hpp"
#include "sparse_svm/svm.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sparse_svm {

/// Per-feature structure of a continuous model over (w, b, xi, u, W), where
/// u_j = 1 means feature j is dropped.
///
///   perspective: (1 - u_j) W_j >= w_j^2, objective term W_j / 2
///   otherwise:   objective term w_j^2 / 2
///   big_m:       |w_j| <= M (1 - u_j)
///
/// Features outside `active` have w_j = 0 and u_j = 1. The budget row is
/// sum_{j in active} u_j = budget; the optional cover row asks for at least
/// one selected feature from `cover`.
struct IndicatorModelSpec {
  std::vector<int> active;
  std::vector<bool> perspective;  // indexed by feature, size n
  std::vector<bool> big_m;
  std::vector<bool> binary;
  std::optional<double> M;
  double budget = 0.0;
  std::vector<int> cover;
};

/// Node fixings on u: -1 free, 0 selected, 1 dropped.
using Fixings = std::vector<signed char>;

class IndicatorModel {
 public:
  IndicatorModel(const Dataset& data, double C, IndicatorModelSpec spec)
      : data_(&data), C_(C), spec_(std::move(spec)) {
    const auto n = data.n();
    if (!(C > 0.0)) throw InvalidArgument("C must be positive");
    auto fill = [n](std::vector<bool>& v) {
      if (v.empty()) v.assign(static_cast<std::size_t>(n), false);
      if (static_cast<Eigen::Index>(v.size()) != n) throw DimensionMismatch("per-feature flag vector size");
    };
    fill(spec_.perspective);
    fill(spec_.big_m);
    fill(spec_.binary);
    svm_detail::check_active(spec_.active, n);
    for (int j : spec_.active)
      if (spec_.big_m[static_cast<std::size_t>(j)] && !(spec_.M && *spec_.M > 0.0))
        throw InvalidArgument("big-M linking needs a positive M");
  }

  const IndicatorModelSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }
  double C() const { return C_; }

  conicqp::ConicProgram build(const Fixings& fix = {}) const {
    using namespace conicqp;
    const Dataset& d = *data_;
    const int m = static_cast<int>(d.m());
    const int k = static_cast<int>(spec_.active.size());
    ConicProgram p;
    // w, b, xi, u, W
    for (int a = 0; a < k; ++a) p.add_variable();
    const int b = p.add_variable();
    for (int i = 0; i < m; ++i) p.add_variable(0.0, kInf, C_);
    const int u0 = p.num_vars();
    for (int a = 0; a < k; ++a) p.add_variable(0.0, 1.0);
    std::vector<int> Wvar(static_cast<std::size_t>(k), -1);
    for (int a = 0; a < k; ++a) {
      const int j = spec_.active[static_cast<std::size_t>(a)];
      if (spec_.perspective[static_cast<std::size_t>(j)])
        Wvar[static_cast<std::size_t>(a)] = p.add_variable(0.0, kInf, 0.5);
      else
        p.add_quadratic(a, a, 1.0);
    }
    for (int i = 0; i < m; ++i) {
      const double yi = d.y()[i];
      std::vector<LinearTerm> row;
      for (int a = 0; a < k; ++a) {
        const double v = d.X()(i, spec_.active[static_cast<std::size_t>(a)]);
        if (v != 0.0) row.push_back({a, yi * v});
      }
      row.push_back({b, yi});
      row.push_back({b + 1 + i, 1.0});
      p.add_row(row, RowSense::kGreaterEqual, 1.0);
    }
    for (int a = 0; a < k; ++a) {
      const int j = spec_.active[static_cast<std::size_t>(a)];
      const int u = u0 + a;
      if (Wvar[static_cast<std::size_t>(a)] >= 0) {
        RotatedCone cone;
        cone.a = AffineExpr{{{u, -1.0}}, 1.0};
        cone.b = AffineExpr::var(Wvar[static_cast<std::size_t>(a)], 0.5);
        cone.x = {AffineExpr::var(a)};
        p.add_cone(std::move(cone));
      }
      if (spec_.big_m[static_cast<std::size_t>(j)]) {
        p.add_row({{a, 1.0}, {u, *spec_.M}}, RowSense::kLessEqual, *spec_.M);
        p.add_row({{a, -1.0}, {u, *spec_.M}}, RowSense::kLessEqual, *spec_.M);
      }
      if (!fix.empty()) {
        const signed char f = fix[static_cast<std::size_t>(j)];
        if (f == 1) {
          p.set_bounds(u, 1.0, 1.0);
          p.set_bounds(a, 0.0, 0.0);
        } else if (f == 0) {
          p.set_bounds(u, 0.0, 0.0);
        }
      }
    }
    std::vector<LinearTerm> budget;
    for (int a = 0; a < k; ++a) budget.push_back({u0 + a, 1.0});
    if (k > 0) p.add_row(budget, RowSense::kEqual, spec_.budget);
    if (!spec_.cover.empty()) {
      std::vector<LinearTerm> cover;
      for (int j : spec_.cover) {
        const int a = position(j);
        if (a >= 0) cover.push_back({u0 + a, 1.0});
      }
      p.add_row(cover, RowSense::kLessEqual, static_cast<double>(cover.size()) - 1.0);
    }
    return p;
  }

  /// Maps a solution of build() back to feature space.
  RelaxationSolution extract(const conicqp::ConicSolution& sol) const {
    const Dataset& d = *data_;
    const auto n = d.n(), m = d.m();
    const int k = static_cast<int>(spec_.active.size());
    RelaxationSolution r;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd W = Eigen::VectorXd::Zero(n);
    const int b = k;
    const int u0 = k + 1 + static_cast<int>(m);
    int wnext = u0 + k;
    for (int a = 0; a < k; ++a) {
      const int j = spec_.active[static_cast<std::size_t>(a)];
      w[j] = sol.x[a];
      u[j] = std::clamp(sol.x[u0 + a], 0.0, 1.0);
      if (spec_.perspective[static_cast<std::size_t>(j)])
        W[j] = std::max(0.0, sol.x[wnext++]);
      else
        W[j] = w[j] * w[j];
    }
    PrimalPoint pt;
    pt.xi = sol.x.segment(b + 1, m).cwiseMax(min_slacks(w, sol.x[b], d));
    pt.w = w;
    pt.b = sol.x[b];
    pt.objective = objective(pt.w, pt.xi, C_);
    pt.support = support_of(pt.w);
    r.point = std::move(pt);
    r.indicator = {u, IndicatorKind::kDeselect};
    r.diagW = W;
    r.lower_bound = sol.lower_bound();
    r.stats.iterations = sol.iterations;
    r.stats.primal_residual = sol.residuals.primal;
    r.stats.dual_residual = sol.residuals.dual;
    r.stats.wall_time_s = sol.wall_time_s;
    return r;
  }

  /// Position of feature j inside `active`, or -1.
  int position(int j) const {
    auto it = std::lower_bound(spec_.active.begin(), spec_.active.end(), j);
    return (it != spec_.active.end() && *it == j) ? static_cast<int>(it - spec_.active.begin()) : -1;
  }

 private:
  const Dataset* data_;
  double C_;
  IndicatorModelSpec spec_;
};

namespace relax_detail {

inline RelaxationSolution solve_model(const IndicatorModel& model, const std::string& what,
                                      const conicqp::IpmSettings& ipm) {
  const auto sol = conicqp::solve(model.build(), ipm);
  if (!sol.optimal()) throw SolveFailed(what, sol.status);
  return model.extract(sol);
}

inline IndicatorModelSpec full_spec(Eigen::Index n, int B) {
  IndicatorModelSpec s;
  s.active = svm_detail::all_features(n);
  s.budget = static_cast<double>(n - B);
  return s;
}

inline void check_budget(const Dataset& data, int B) {
  if (B < 1 || B > data.n()) throw InvalidArgument("B must satisfy 1 <= B <= n");
}

inline std::string m_note(double M) {
  return "M = " + std::to_string(M) + " (valid only when M >= max |w_j| over FS optima)";
}

}  // namespace relax_detail

/// Box relaxation of the big-M model: |w_j| <= M v_j, sum v = B, 0 <= v <= 1.
/// The indicator is returned as v (select). diagW is w^2.
inline RelaxationSolution solve_boxmp(const Dataset& data, double C, int B, double M,
                                      const conicqp::IpmSettings& ipm = {}) {
  relax_detail::check_budget(data, B);
  if (!(M > 0.0)) throw InvalidArgument("M must be positive");
  auto spec = relax_detail::full_spec(data.n(), B);
  spec.big_m.assign(static_cast<std::size_t>(data.n()), true);
  spec.M = M;
  auto r = relax_detail::solve_model(IndicatorModel(data, C, spec), "BoxMP", ipm);
  r.indicator = {r.indicator.complemented().values, IndicatorKind::kSelect};
  r.metadata = "BoxMP; " + relax_detail::m_note(M);
  return r;
}

/// The diagonal SDP relaxation reduces to the box relaxation; same value.
inline RelaxationSolution solve_dsmp(const Dataset& data, double C, int B, double M,
                                     const conicqp::IpmSettings& ipm = {}) {
  auto r = solve_boxmp(data, C, B, M, ipm);
  r.metadata = "DSMP solved as BoxMP (the two relaxations have equal value); " + relax_detail::m_note(M);
  return r;
}

/// Largest |W_j (1 - u_j) - w_j^2| / (1 + W_j) over features with u_j <= 1 - 1e-6.
inline double perspective_defect(const RelaxationSolution& r) {
  const Eigen::VectorXd u = r.indicator.as_deselect();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u[j] > 1.0 - 1e-6) continue;
    const double w = r.point.w[j];
    worst = std::max(worst, std::abs(r.diagW[j] * (1.0 - u[j]) - w * w) / (1.0 + r.diagW[j]));
  }
  return worst;
}

/// Decomposed conic relaxation: per-feature rotated cones (1 - u_j) W_j >= w_j^2
/// with sum u = n - B.
inline RelaxationSolution solve_dscop(const Dataset& data, double C, int B,
                                      const conicqp::IpmSettings& ipm = {}) {
  relax_detail::check_budget(data, B);
  auto spec = relax_detail::full_spec(data.n(), B);
  spec.perspective.assign(static_cast<std::size_t>(data.n()), true);
  auto r = relax_detail::solve_model(IndicatorModel(data, C, spec), "DSCoP", ipm);
  r.metadata = "DSCoP; perspective defect " + std::to_string(perspective_defect(r));
  return r;
}

/// DSCoP plus the big-M box |w_j| <= M (1 - u_j).
inline RelaxationSolution solve_dscomp(const Dataset& data, double C, int B, double M,
                                       const conicqp::IpmSettings& ipm = {}) {
  relax_detail::check_budget(data, B);
  if (!(M > 0.0)) throw InvalidArgument("M must be positive");
  auto spec = relax_detail::full_spec(data.n(), B);
  spec.perspective.assign(static_cast<std::size_t>(data.n()), true);
  spec.big_m.assign(static_cast<std::size_t>(data.n()), true);
  spec.M = M;
  auto r = relax_detail::solve_model(IndicatorModel(data, C, spec), "DSCoMP", ipm);
  r.metadata = "DSCoMP; " + relax_detail::m_note(M);
  return r;
}

struct Psd3Membership {
  bool eig_route = false;
  bool soc_route = false;
};

/// Membership of [[1, w, u], [w, W, 0], [u, 0, u]] in the PSD cone, decided
/// by eigenvalues and by the equivalent rotated-cone conditions.
inline Psd3Membership psd3_membership(double w, double u, double W, double tol = 1e-7) {
  Eigen::Matrix3d A;
  A << 1.0, w, u, w, W, 0.0, u, 0.0, u;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A, Eigen::EigenvaluesOnly);
  Psd3Membership r;
  r.eig_route = es.eigenvalues().minCoeff() >= -tol;
  const double s = 1.0 - u;
  r.soc_route = u >= -tol && u <= 1.0 + tol && W >= -tol &&
                std::sqrt((W - s) * (W - s) + 4.0 * w * w) <= W + s + tol;
  return r;
}

/// max(||w*||_1 / B, ||w*||_inf) for the unrestricted SVM optimum w*. Any M
/// at or above this makes the box relaxation collapse to the SVM value: the
/// point v_j = |w*_j| / M then fits under sum v <= B and v <= 1, and can be
/// padded up to sum v = B.
inline double box_collapse_threshold(const Dataset& data, double C, int B, const conicqp::IpmSettings& ipm = {}) {
  relax_detail::check_budget(data, B);
  const Eigen::VectorXd w = solve_svm(data, C, std::nullopt, ipm).w;
  return std::max(w.lpNorm<1>() / B, w.lpNorm<Eigen::Infinity>());
}

/// (UB - LB) / UB, as a fraction.
inline double relaxed_gap(double ub, double lb) { return (ub - lb) / ub; }

}  // namespace sparse_svm
