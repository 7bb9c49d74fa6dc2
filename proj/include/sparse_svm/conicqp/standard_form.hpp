#pragma once

#include "sparse_svm/conicqp/cones.hpp"
#include "sparse_svm/conicqp/program.hpp"

#include <Eigen/SparseCore>

#include <cmath>
#include <map>
#include <vector>

namespace sparse_svm::conicqp {

/// Where a standard-form row came from, so duals can be reported per
/// constraint class of the original program.
struct RowOrigin {
  enum class Kind { kRow, kLower, kUpper, kCone, kDerived } kind = Kind::kDerived;
  int index = -1;      // row, variable or cone index
  int component = -1;  // component inside a cone (0: a+b, 1: a-b, 2..: x)
};

/// minimize 1/2 x'Px + q'x + offset  s.t.  Ax + s = b, s in K.
struct StandardForm {
  int n = 0;
  std::vector<int> orig_of;    // standard var -> original var
  std::vector<int> std_of;     // original var -> standard var, -1 when fixed
  Eigen::VectorXd fixed_value;  // valid where std_of == -1
  Eigen::SparseMatrix<double> P;  // upper triangle
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd q, b;
  double offset = 0.0;
  ConeLayout cones;
  std::vector<RowOrigin> origin;
  bool infeasible = false;
  std::string infeasible_reason;

  Eigen::VectorXd expand(const Eigen::VectorXd& x) const {
    Eigen::VectorXd full = fixed_value;
    for (int k = 0; k < n; ++k) full[orig_of[k]] = x[k];
    return full;
  }
};

namespace detail {

struct LinRow {
  std::map<int, double> terms;
  RowSense sense;
  double rhs;
  RowOrigin origin;
};

inline bool is_fixed(double lo, double hi) {
  return std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-12 * (1.0 + std::abs(lo));
}

}  // namespace detail

/// Presolve: singleton rows become bounds, variables with equal bounds are
/// substituted out, and cones whose x-part vanishes are replaced by the
/// linear conditions they imply. Then the program is laid out over the
/// product cone {0} x R+ x SOC with rotated cones mapped to standard ones:
/// (a+b, a-b, sqrt(2) x) in SOC  <=>  2ab >= ||x||^2, a, b >= 0.
inline StandardForm to_standard_form(const ConicProgram& prog) {
  using detail::LinRow;
  StandardForm sf;
  const int nv = prog.num_vars();
  Eigen::VectorXd lo = prog.lower(), hi = prog.upper();
  sf.fixed_value = Eigen::VectorXd::Zero(nv);

  std::vector<LinRow> rows(prog.num_rows());
  for (int r = 0; r < prog.num_rows(); ++r) {
    rows[r].sense = prog.senses()[r];
    rows[r].rhs = prog.rhs()[r];
    rows[r].origin = {RowOrigin::Kind::kRow, r, -1};
  }
  for (const auto& t : prog.constraint_triplets()) rows[t.row].terms[t.col] += t.value;

  std::vector<bool> fixed(nv, false);
  std::vector<bool> row_done;
  std::vector<bool> cone_done(prog.cones().size(), false);

  auto fail = [&sf](const std::string& why) {
    sf.infeasible = true;
    if (sf.infeasible_reason.empty()) sf.infeasible_reason = why;
  };

  bool changed = true;
  while (changed && !sf.infeasible) {
    changed = false;
    row_done.resize(rows.size(), false);
    for (int j = 0; j < nv; ++j) {
      if (fixed[j]) continue;
      if (lo[j] > hi[j] + 1e-9 * (1.0 + std::abs(hi[j]))) {
        fail("conflicting bounds on variable " + std::to_string(j));
        break;
      }
      if (detail::is_fixed(lo[j], hi[j]) || (lo[j] > hi[j])) {
        fixed[j] = true;
        sf.fixed_value[j] = 0.5 * (lo[j] + hi[j]);
        changed = true;
      }
    }
    for (std::size_t r = 0; r < rows.size() && !sf.infeasible; ++r) {
      if (row_done[r]) continue;
      LinRow& row = rows[r];
      for (auto it = row.terms.begin(); it != row.terms.end();) {
        if (fixed[it->first]) {
          row.rhs -= it->second * sf.fixed_value[it->first];
          it = row.terms.erase(it);
          changed = true;
        } else if (it->second == 0.0) {
          it = row.terms.erase(it);
        } else {
          ++it;
        }
      }
      const double tol = 1e-9 * (1.0 + std::abs(row.rhs));
      if (row.terms.empty()) {
        const bool ok = (row.sense == RowSense::kLessEqual && 0.0 <= row.rhs + tol) ||
                        (row.sense == RowSense::kGreaterEqual && 0.0 >= row.rhs - tol) ||
                        (row.sense == RowSense::kEqual && std::abs(row.rhs) <= tol);
        if (!ok) fail("constant row violated");
        row_done[r] = true;
        continue;
      }
      if (row.terms.size() == 1) {
        const int j = row.terms.begin()->first;
        const double a = row.terms.begin()->second;
        const double v = row.rhs / a;
        RowSense s = row.sense;
        if (a < 0.0 && s != RowSense::kEqual)
          s = s == RowSense::kLessEqual ? RowSense::kGreaterEqual : RowSense::kLessEqual;
        if (s != RowSense::kGreaterEqual) hi[j] = std::min(hi[j], v);
        if (s != RowSense::kLessEqual) lo[j] = std::max(lo[j], v);
        row_done[r] = true;
        changed = true;
      }
    }
    // Cones whose x-part is identically zero reduce to a >= 0, b >= 0; a cone
    // with a constant non-positive a (or b) forces x = 0.
    for (std::size_t k = 0; k < prog.cones().size() && !sf.infeasible; ++k) {
      if (cone_done[k]) continue;
      const RotatedCone& cone = prog.cones()[k];
      auto reduce = [&](const AffineExpr& e) {
        std::map<int, double> t;
        double c = e.constant;
        for (const auto& term : e.terms) {
          if (fixed[term.var])
            c += term.coef * sf.fixed_value[term.var];
          else
            t[term.var] += term.coef;
        }
        for (auto it = t.begin(); it != t.end();) it = it->second == 0.0 ? t.erase(it) : std::next(it);
        return std::pair{t, c};
      };
      bool x_zero = true;
      for (const auto& e : cone.x) {
        auto [t, c] = reduce(e);
        if (!t.empty() || std::abs(c) > 0.0) x_zero = false;
      }
      auto [ta, ca] = reduce(cone.a);
      auto [tb, cb] = reduce(cone.b);
      const bool a_dead = ta.empty() && ca <= 1e-14;
      const bool b_dead = tb.empty() && cb <= 1e-14;
      if (!x_zero && !a_dead && !b_dead) continue;
      cone_done[k] = true;
      changed = true;
      const RowOrigin o{RowOrigin::Kind::kDerived, static_cast<int>(k), -1};
      rows.push_back({ta, RowSense::kGreaterEqual, -ca, o});
      rows.push_back({tb, RowSense::kGreaterEqual, -cb, o});
      if (!x_zero)
        for (const auto& e : cone.x) {
          auto [t, c] = reduce(e);
          rows.push_back({t, RowSense::kEqual, -c, o});
        }
    }
  }
  row_done.resize(rows.size(), false);

  // Variable numbering.
  sf.std_of.assign(nv, -1);
  for (int j = 0; j < nv; ++j) {
    if (fixed[j]) continue;
    sf.std_of[j] = sf.n++;
    sf.orig_of.push_back(j);
  }
  const int n = sf.n;

  // Objective.
  sf.q = Eigen::VectorXd::Zero(n);
  sf.offset = prog.offset();
  for (int j = 0; j < nv; ++j) {
    if (fixed[j])
      sf.offset += prog.cost()[j] * sf.fixed_value[j];
    else
      sf.q[sf.std_of[j]] += prog.cost()[j];
  }
  std::vector<Eigen::Triplet<double>> ptrip;
  for (const auto& t : prog.quadratic()) {
    const int i = t.row, j = t.col;
    const bool fi = fixed[i], fj = fixed[j];
    if (i == j) {
      if (fi)
        sf.offset += 0.5 * t.value * sf.fixed_value[i] * sf.fixed_value[i];
      else
        ptrip.emplace_back(sf.std_of[i], sf.std_of[i], t.value);
    } else if (fi && fj) {
      sf.offset += t.value * sf.fixed_value[i] * sf.fixed_value[j];
    } else if (fi) {
      sf.q[sf.std_of[j]] += t.value * sf.fixed_value[i];
    } else if (fj) {
      sf.q[sf.std_of[i]] += t.value * sf.fixed_value[j];
    } else {
      const int a = std::min(sf.std_of[i], sf.std_of[j]), b = std::max(sf.std_of[i], sf.std_of[j]);
      ptrip.emplace_back(a, b, t.value);
    }
  }
  sf.P.resize(n, n);
  sf.P.setFromTriplets(ptrip.begin(), ptrip.end());

  // Constraint rows in cone order.
  std::vector<Eigen::Triplet<double>> atrip;
  std::vector<double> bvec;
  int row = 0;
  auto emit = [&](const std::map<int, double>& terms, double scale, double rhs, RowOrigin o) {
    for (const auto& [j, v] : terms) atrip.emplace_back(row, sf.std_of[j], scale * v);
    bvec.push_back(rhs);
    sf.origin.push_back(o);
    ++row;
  };
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (!row_done[r] && rows[r].sense == RowSense::kEqual) emit(rows[r].terms, 1.0, rows[r].rhs, rows[r].origin);
  sf.cones.zero = row;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (row_done[r] || rows[r].sense == RowSense::kEqual) continue;
    if (rows[r].sense == RowSense::kLessEqual)
      emit(rows[r].terms, 1.0, rows[r].rhs, rows[r].origin);
    else
      emit(rows[r].terms, -1.0, -rows[r].rhs, rows[r].origin);
  }
  for (int j = 0; j < nv; ++j) {
    if (fixed[j]) continue;
    if (std::isfinite(lo[j])) emit({{j, 1.0}}, -1.0, -lo[j], {RowOrigin::Kind::kLower, j, -1});
    if (std::isfinite(hi[j])) emit({{j, 1.0}}, 1.0, hi[j], {RowOrigin::Kind::kUpper, j, -1});
  }
  sf.cones.nonneg = row - sf.cones.zero;

  // s = h - G x for each cone component expression e = g'x + c: A row = -g, b = c.
  const double r2 = std::sqrt(2.0);
  for (std::size_t k = 0; k < prog.cones().size(); ++k) {
    if (cone_done[k]) continue;
    const RotatedCone& cone = prog.cones()[k];
    auto reduced = [&](const AffineExpr& e, double scale, std::map<int, double>& t, double& c) {
      for (const auto& term : e.terms) {
        if (fixed[term.var])
          c += scale * term.coef * sf.fixed_value[term.var];
        else
          t[term.var] += scale * term.coef;
      }
      c += scale * e.constant;
    };
    std::map<int, double> t0, t1;
    double c0 = 0.0, c1 = 0.0;
    reduced(cone.a, 1.0, t0, c0);
    reduced(cone.b, 1.0, t0, c0);
    reduced(cone.a, 1.0, t1, c1);
    reduced(cone.b, -1.0, t1, c1);
    emit(t0, -1.0, c0, {RowOrigin::Kind::kCone, static_cast<int>(k), 0});
    emit(t1, -1.0, c1, {RowOrigin::Kind::kCone, static_cast<int>(k), 1});
    for (std::size_t e = 0; e < cone.x.size(); ++e) {
      std::map<int, double> t;
      double c = 0.0;
      reduced(cone.x[e], r2, t, c);
      emit(t, -1.0, c, {RowOrigin::Kind::kCone, static_cast<int>(k), static_cast<int>(e) + 2});
    }
    sf.cones.soc_dims.push_back(2 + static_cast<int>(cone.x.size()));
  }
  sf.cones.finalize();
  sf.A.resize(row, n);
  sf.A.setFromTriplets(atrip.begin(), atrip.end());
  sf.A.makeCompressed();
  sf.b = Eigen::Map<Eigen::VectorXd>(bvec.data(), static_cast<Eigen::Index>(bvec.size()));
  return sf;
}

}  // namespace sparse_svm::conicqp
