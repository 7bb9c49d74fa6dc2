#pragma once

// Reference computations that share no code with the library solvers.

#include "sparse_svm/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracles {

// Euclidean projection onto {0 <= a <= C, y'a = 0} by bisection on the
// multiplier of the hyperplane.
inline Eigen::VectorXd project_dual(const Eigen::VectorXd& v, const Eigen::VectorXd& y, double C) {
  auto at = [&](double lam) { return (v - lam * y).cwiseMax(0.0).cwiseMin(C).eval(); };
  double lo = -1.0, hi = 1.0;
  while (y.dot(at(lo)) < 0.0) lo *= 2.0;
  while (y.dot(at(hi)) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (y.dot(at(mid)) > 0.0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

/// Optimal value of the soft-margin SVM on the columns in `cols`, via
/// accelerated projected gradient on the dual
///   max sum a - 1/2 a' Q a,  Q_ik = y_i y_k x_i' x_k,  0 <= a <= C, y'a = 0.
inline double svm_value_dual(const sparse_svm::Dataset& d, double C, const std::vector<int>& cols,
                             int iters = 200000) {
  const auto m = d.m();
  Eigen::MatrixXd Z(m, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) Z.col(static_cast<Eigen::Index>(k)) = d.X().col(cols[k]);
  Z = d.y().asDiagonal() * Z;
  const Eigen::MatrixXd Q = Z * Z.transpose();
  const double L = std::max(1e-9, Q.operatorNorm());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m), prev = a;
  auto value = [&](const Eigen::VectorXd& x) { return x.sum() - 0.5 * x.dot(Q * x); };
  double t = 1.0;
  for (int it = 0; it < iters; ++it) {
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Eigen::VectorXd z = a + ((t - 1.0) / tn) * (a - prev);
    prev = a;
    a = project_dual(z + (Eigen::VectorXd::Ones(m) - Q * z) / L, d.y(), C);
    t = tn;
    if (value(a) < value(prev)) t = 1.0;  // restart
    if ((a - prev).lpNorm<Eigen::Infinity>() < 1e-14) break;
  }
  return value(a);
}

// Projected gradient with Nesterov momentum on a box.
inline Eigen::VectorXd box_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi) {
  const double L = std::max(1e-12, Q.operatorNorm());
  Eigen::VectorXd x = lo.cwiseMax(Eigen::VectorXd::Zero(c.size())).cwiseMin(hi), prev = x;
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd yk = x + (it / (it + 3.0)) * (x - prev);
    prev = x;
    x = (yk - (Q * yk + c) / L).cwiseMax(lo).cwiseMin(hi);
    if ((x - prev).lpNorm<Eigen::Infinity>() < 1e-15) break;
  }
  return x;
}

/// min c'x over {G x <= h} by enumerating every basis of n tight
/// constraints. The polytope must be bounded and nonempty; returns +inf when
/// no vertex is feasible.
inline double lp_vertices(const Eigen::VectorXd& c, const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                          double feas_tol = 1e-9) {
  const auto n = c.size(), rows = G.rows();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = static_cast<int>(i);
  while (true) {
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd r(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      A.row(k) = G.row(pick[static_cast<std::size_t>(k)]);
      r[k] = h[pick[static_cast<std::size_t>(k)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(r);
      if (((G * x - h).array() <= feas_tol * (1.0 + h.cwiseAbs().array())).all()) best = std::min(best, c.dot(x));
    }
    // Next n-subset of the rows in lexicographic order.
    Eigen::Index k = n - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == rows - n + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (Eigen::Index t = k + 1; t < n; ++t) pick[static_cast<std::size_t>(t)] = pick[static_cast<std::size_t>(t - 1)] + 1;
  }
  return best;
}

}  // namespace oracles
