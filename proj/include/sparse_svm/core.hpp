#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparse_svm {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised by enumeration-style routines when the instance is above their size guard.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct Provenance {
  std::string source;
  std::string preprocessing = "none";
};

/// Immutable m x n sample matrix with +-1 labels.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd y,
          std::vector<std::string> feature_names = {}, Provenance provenance = {})
      : X_(std::move(X)),
        y_(std::move(y)),
        feature_names_(std::move(feature_names)),
        provenance_(std::move(provenance)) {
    if (X_.rows() < 1 || X_.cols() < 1) throw InvalidArgument("dataset needs m >= 1 and n >= 1");
    if (y_.size() != X_.rows()) throw DimensionMismatch("label count differs from sample count");
    if (!feature_names_.empty() && static_cast<Eigen::Index>(feature_names_.size()) != X_.cols())
      throw DimensionMismatch("feature name count differs from column count");
    if (!X_.allFinite()) throw InvalidArgument("sample matrix contains NaN or infinite entries");
    Eigen::Index pos = 0, neg = 0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (y_[i] == 1.0)
        ++pos;
      else if (y_[i] == -1.0)
        ++neg;
      else
        throw InvalidArgument("labels must be exactly -1 or +1");
    }
    if (pos == 0 || neg == 0) throw InvalidArgument("both classes must be present");
  }

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  Eigen::Index m() const { return X_.rows(); }
  Eigen::Index n() const { return X_.cols(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Provenance& provenance() const { return provenance_; }

  Eigen::Index positives() const { return (y_.array() > 0).count(); }
  Eigen::Index negatives() const { return (y_.array() < 0).count(); }

  /// Rows selected by `rows`, same columns and provenance.
  Dataset subset(const std::vector<int>& rows) const {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), n());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      X.row(static_cast<Eigen::Index>(r)) = X_.row(rows[r]);
      y[static_cast<Eigen::Index>(r)] = y_[rows[r]];
    }
    return Dataset(std::move(X), std::move(y), feature_names_, provenance_);
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  std::vector<std::string> feature_names_;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ProblemConfig {
  double C = 1.0;
  int B = 1;
  std::optional<double> M;
  double eps_feas = 1e-8;
  double eps_rel_gap = 1e-6;
  double mip_gap_stop = 0.01;  // percent
  double time_limit_s = 3600.0;
  int heur_k = 10;
  int heur_rho = 10;
  int exact_s = 10;
  double sub_time_limit_s = 60.0;
  unsigned seed = 0;

  void validate(Eigen::Index n) const {
    if (!(C > 0.0)) throw InvalidArgument("C must be positive");
    if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
    if (M && !(*M > 0.0)) throw InvalidArgument("M must be positive when present");
    if (!(eps_feas > 0.0) || !(eps_rel_gap > 0.0) || !(mip_gap_stop > 0.0))
      throw InvalidArgument("tolerances must be positive");
    if (!(time_limit_s > 0.0) || !(sub_time_limit_s > 0.0))
      throw InvalidArgument("time limits must be positive");
  }
};

inline constexpr double kDefaultZeroTol = 1e-6;

// ---------------------------------------------------------------------------
// Primal points
// ---------------------------------------------------------------------------

/// ||w||_0 counted with a strict threshold: |w_j| > zero_tol.
inline int l0_norm(const Eigen::VectorXd& w, double zero_tol = kDefaultZeroTol) {
  if (!(zero_tol > 0.0)) throw InvalidArgument("zero_tol must be positive");
  return static_cast<int>((w.array().abs() > zero_tol).count());
}

inline std::vector<int> support_of(const Eigen::VectorXd& w, double zero_tol = kDefaultZeroTol) {
  std::vector<int> s;
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (std::abs(w[j]) > zero_tol) s.push_back(static_cast<int>(j));
  return s;
}

/// Componentwise-minimal slacks: xi_i = max(0, 1 - y_i (w'x_i + b)).
inline Eigen::VectorXd min_slacks(const Eigen::VectorXd& w, double b, const Dataset& data) {
  if (w.size() != data.n()) throw DimensionMismatch("w has wrong length");
  Eigen::VectorXd scores = data.X() * w;
  scores.array() += b;
  Eigen::VectorXd margin = data.y().cwiseProduct(scores);
  return (1.0 - margin.array()).max(0.0).matrix();
}

struct PrimalPoint {
  Eigen::VectorXd w;
  double b = 0.0;
  Eigen::VectorXd xi;
  double objective = 0.0;
  std::vector<int> support;
};

inline double objective(const Eigen::VectorXd& w, const Eigen::VectorXd& xi, double C) {
  return 0.5 * w.squaredNorm() + C * xi.sum();
}

inline double objective(const PrimalPoint& p, double C) {
  if (p.xi.size() == 0 && p.w.size() == 0) return 0.0;
  return objective(p.w, p.xi, C);
}

/// Builds a point from (w, b) using minimal slacks, so the result lies in Xi.
inline PrimalPoint make_point(Eigen::VectorXd w, double b, const Dataset& data, double C,
                              double zero_tol = kDefaultZeroTol) {
  PrimalPoint p;
  p.xi = min_slacks(w, b, data);
  p.w = std::move(w);
  p.b = b;
  p.objective = objective(p.w, p.xi, C);
  p.support = support_of(p.w, zero_tol);
  return p;
}

inline bool margin_feasible(const PrimalPoint& p, const Dataset& data, double eps_feas = 1e-8) {
  if (p.w.size() != data.n() || p.xi.size() != data.m()) throw DimensionMismatch("point/data size");
  if ((p.xi.array() < -eps_feas).any()) return false;
  Eigen::VectorXd margin = data.y().cwiseProduct(data.X() * p.w) + data.y() * p.b;
  return ((margin + p.xi).array() >= 1.0 - eps_feas).all();
}

/// Xi-membership, ||w||_0 <= B and objective consistency.
inline bool fs_feasible(const PrimalPoint& p, const Dataset& data, double C, int B,
                        double eps_feas = 1e-8, double zero_tol = kDefaultZeroTol) {
  if (!margin_feasible(p, data, eps_feas)) return false;
  if (l0_norm(p.w, zero_tol) > B) return false;
  double recomputed = objective(p, C);
  return std::abs(recomputed - p.objective) <= 1e-10 * std::max(1.0, std::abs(recomputed));
}

// ---------------------------------------------------------------------------
// Indicators and solver results
// ---------------------------------------------------------------------------

enum class IndicatorKind { kSelect /* v */, kDeselect /* u */ };

struct IndicatorVector {
  Eigen::VectorXd values;
  IndicatorKind kind = IndicatorKind::kDeselect;

  bool integral(double int_tol = 1e-6) const {
    return (values.array().min((1.0 - values.array()).abs()) <= int_tol).all();
  }

  /// u = e - v (and back); the kind flips.
  IndicatorVector complemented() const {
    return {Eigen::VectorXd::Ones(values.size()) - values,
            kind == IndicatorKind::kSelect ? IndicatorKind::kDeselect : IndicatorKind::kSelect};
  }

  Eigen::VectorXd as_deselect() const {
    return kind == IndicatorKind::kDeselect ? values : complemented().values;
  }
};

struct SolverStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double wall_time_s = 0.0;
};

struct RelaxationSolution {
  PrimalPoint point;
  IndicatorVector indicator;
  Eigen::VectorXd diagW;
  double lower_bound = 0.0;
  SolverStats stats;
  std::string metadata;
};

enum class MipStatus { kOptimal, kTimeLimit, kInfeasible, kGapStop };

inline const char* to_string(MipStatus s) {
  switch (s) {
    case MipStatus::kOptimal: return "Optimal";
    case MipStatus::kTimeLimit: return "TimeLimit";
    case MipStatus::kInfeasible: return "Infeasible";
    case MipStatus::kGapStop: return "GapStop";
  }
  return "?";
}

inline double relative_gap(double ub, double lb) {
  if (!std::isfinite(ub)) return std::numeric_limits<double>::infinity();
  if (!std::isfinite(lb)) return std::numeric_limits<double>::infinity();
  return (ub - lb) / std::max(std::abs(ub), 1e-12);
}

struct MipResult {
  std::optional<PrimalPoint> incumbent;
  std::vector<int> branched;                      // indices the assignment refers to
  std::optional<Eigen::VectorXd> binary_assignment;  // u over `branched`, 0 = selected
  double LB = -std::numeric_limits<double>::infinity();
  double UB = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  MipStatus status = MipStatus::kInfeasible;
  long nodes_explored = 0;
  double wall_time_s = 0.0;

  void refresh_gap() { gap = relative_gap(UB, LB); }
};

}  // namespace sparse_svm
