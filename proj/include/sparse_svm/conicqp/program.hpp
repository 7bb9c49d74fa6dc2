#pragma once

#include "sparse_svm/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace sparse_svm::conicqp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

/// sum_k coef_k * x[var_k] + constant
struct AffineExpr {
  std::vector<LinearTerm> terms;
  double constant = 0.0;

  static AffineExpr var(int v, double coef = 1.0) { return AffineExpr{{{v, coef}}, 0.0}; }
  static AffineExpr value(double c) { return AffineExpr{{}, c}; }

  AffineExpr& add(int v, double coef) {
    terms.push_back({v, coef});
    return *this;
  }

  double evaluate(const Eigen::VectorXd& x) const {
    double r = constant;
    for (const auto& t : terms) r += t.coef * x[t.var];
    return r;
  }
};

enum class RowSense { kLessEqual, kEqual, kGreaterEqual };

/// 2 a b >= ||x||^2 with a >= 0, b >= 0.
struct RotatedCone {
  AffineExpr a;
  AffineExpr b;
  std::vector<AffineExpr> x;
};

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Canonical form shared by every continuous problem in the suite:
///
///   minimize   1/2 x'Qx + c'x + offset
///   subject to rows (<=, =, >=), lo <= x <= hi, rotated cones.
///
/// Q is accumulated from triplets; add_quadratic(i, j, v) with i != j adds v
/// to both Q(i,j) and Q(j,i).
class ConicProgram {
 public:
  ConicProgram() = default;
  explicit ConicProgram(int num_vars)
      : c_(Eigen::VectorXd::Zero(num_vars)),
        lo_(Eigen::VectorXd::Constant(num_vars, -kInf)),
        hi_(Eigen::VectorXd::Constant(num_vars, kInf)) {}

  int add_variable(double lo = -kInf, double hi = kInf, double cost = 0.0) {
    const int idx = num_vars();
    c_.conservativeResize(idx + 1);
    lo_.conservativeResize(idx + 1);
    hi_.conservativeResize(idx + 1);
    c_[idx] = cost;
    lo_[idx] = lo;
    hi_[idx] = hi;
    return idx;
  }

  int num_vars() const { return static_cast<int>(c_.size()); }
  int num_rows() const { return static_cast<int>(senses_.size()); }

  void set_bounds(int var, double lo, double hi) {
    lo_[var] = lo;
    hi_[var] = hi;
  }
  void set_cost(int var, double cost) { c_[var] = cost; }
  void add_quadratic(int i, int j, double value) {
    if (i > j) std::swap(i, j);
    q_.push_back({i, j, value});
  }
  void set_offset(double offset) { offset_ = offset; }

  int add_row(const std::vector<LinearTerm>& terms, RowSense sense, double rhs) {
    const int r = num_rows();
    for (const auto& t : terms) a_.push_back({r, t.var, t.coef});
    senses_.push_back(sense);
    rhs_.push_back(rhs);
    return r;
  }

  int add_cone(RotatedCone cone) {
    cones_.push_back(std::move(cone));
    return static_cast<int>(cones_.size()) - 1;
  }

  /// Index-form cone 2 x[a] x[b] >= sum x[k]^2.
  int add_rotated_cone(int a, int b, const std::vector<int>& x) {
    RotatedCone cone{AffineExpr::var(a), AffineExpr::var(b), {}};
    for (int k : x) cone.x.push_back(AffineExpr::var(k));
    return add_cone(std::move(cone));
  }

  const Eigen::VectorXd& cost() const { return c_; }
  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }
  const std::vector<Triplet>& quadratic() const { return q_; }
  const std::vector<Triplet>& constraint_triplets() const { return a_; }
  const std::vector<RowSense>& senses() const { return senses_; }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<RotatedCone>& cones() const { return cones_; }
  double offset() const { return offset_; }

  double objective(const Eigen::VectorXd& x) const {
    double v = offset_ + c_.dot(x);
    for (const auto& t : q_) {
      if (t.row == t.col)
        v += 0.5 * t.value * x[t.row] * x[t.row];
      else
        v += t.value * x[t.row] * x[t.col];
    }
    return v;
  }

  /// Largest violation of rows, bounds and cones at x (0 when feasible).
  double max_violation(const Eigen::VectorXd& x) const {
    double viol = 0.0;
    std::vector<double> act(senses_.size(), 0.0);
    for (const auto& t : a_) act[t.row] += t.value * x[t.col];
    for (std::size_t r = 0; r < senses_.size(); ++r) {
      const double d = act[r] - rhs_[r];
      if (senses_[r] == RowSense::kLessEqual) viol = std::max(viol, d);
      if (senses_[r] == RowSense::kGreaterEqual) viol = std::max(viol, -d);
      if (senses_[r] == RowSense::kEqual) viol = std::max(viol, std::abs(d));
    }
    for (int j = 0; j < num_vars(); ++j) {
      viol = std::max(viol, lo_[j] - x[j]);
      viol = std::max(viol, x[j] - hi_[j]);
    }
    for (const auto& k : cones_) {
      const double a = k.a.evaluate(x), b = k.b.evaluate(x);
      double sq = 0.0;
      for (const auto& e : k.x) sq += std::pow(e.evaluate(x), 2);
      viol = std::max({viol, -a, -b, (sq - 2.0 * a * b) / (1.0 + sq)});
    }
    return viol;
  }

  /// Checks index ranges, Q symmetry of storage, and that no variable occupies
  /// the (a, b) slot of more than one cone.
  void validate() const {
    const int n = num_vars();
    auto check = [n](int v) {
      if (v < 0 || v >= n) throw InvalidArgument("variable index out of range");
    };
    for (const auto& t : q_) {
      check(t.row);
      check(t.col);
    }
    for (const auto& t : a_) check(t.col);
    for (int j = 0; j < n; ++j)
      if (lo_[j] > hi_[j]) throw InvalidArgument("lower bound exceeds upper bound");
    std::set<int> slot_vars;
    for (const auto& k : cones_) {
      std::set<int> mine;
      for (const auto* e : {&k.a, &k.b})
        for (const auto& t : e->terms) {
          check(t.var);
          mine.insert(t.var);
        }
      for (int v : mine)
        if (!slot_vars.insert(v).second)
          throw InvalidArgument("variable used in the (a,b) slot of two cones");
      for (const auto& e : k.x)
        for (const auto& t : e.terms) check(t.var);
    }
  }

  /// Plain-text listing with sorted triplets, stable across builds; intended
  /// for golden-file diffs.
  std::string canonical_listing() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "vars " << num_vars() << "\n";
    for (int j = 0; j < num_vars(); ++j)
      os << "var " << j << " lo " << lo_[j] << " hi " << hi_[j] << " c " << c_[j] << "\n";
    os << "offset " << offset_ << "\n";
    auto sorted = [](std::vector<Triplet> ts) {
      std::sort(ts.begin(), ts.end(), [](const Triplet& l, const Triplet& r) {
        return std::tie(l.row, l.col) < std::tie(r.row, r.col);
      });
      return ts;
    };
    for (const auto& t : sorted(q_)) os << "Q " << t.row << " " << t.col << " " << t.value << "\n";
    for (const auto& t : sorted(a_)) os << "A " << t.row << " " << t.col << " " << t.value << "\n";
    for (int r = 0; r < num_rows(); ++r) {
      const char* s = senses_[r] == RowSense::kLessEqual ? "<=" : senses_[r] == RowSense::kEqual ? "=" : ">=";
      os << "row " << r << " " << s << " " << rhs_[r] << "\n";
    }
    auto expr = [&os](const AffineExpr& e) {
      auto terms = e.terms;
      std::sort(terms.begin(), terms.end(), [](auto& l, auto& r) { return l.var < r.var; });
      os << "[";
      for (const auto& t : terms) os << " " << t.coef << "*x" << t.var;
      os << " + " << e.constant << " ]";
    };
    for (std::size_t k = 0; k < cones_.size(); ++k) {
      os << "rsoc " << k << " a";
      expr(cones_[k].a);
      os << " b";
      expr(cones_[k].b);
      for (const auto& e : cones_[k].x) {
        os << " x";
        expr(e);
      }
      os << "\n";
    }
    return os.str();
  }

 private:
  Eigen::VectorXd c_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  std::vector<Triplet> q_;
  std::vector<Triplet> a_;
  std::vector<RowSense> senses_;
  std::vector<double> rhs_;
  std::vector<RotatedCone> cones_;
  double offset_ = 0.0;
};

}  // namespace sparse_svm::conicqp
