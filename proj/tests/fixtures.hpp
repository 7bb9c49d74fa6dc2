#pragma once

#include "sparse_svm/core.hpp"

#include <Eigen/Core>

#include <random>

namespace fixtures {

// X = [[1, 0], [-1, 0]], y = (+1, -1)
inline sparse_svm::Dataset sparse_pair() {
  Eigen::MatrixXd X(2, 2);
  X << 1, 0, -1, 0;
  Eigen::VectorXd y(2);
  y << 1, -1;
  return {X, y};
}

// X = [[1, 1], [-1, -1]], y = (+1, -1)
inline sparse_svm::Dataset dense_pair() {
  Eigen::MatrixXd X(2, 2);
  X << 1, 1, -1, -1;
  Eigen::VectorXd y(2);
  y << 1, -1;
  return {X, y};
}

/// Gaussian classes whose means differ in the first `informative` features.
inline sparse_svm::Dataset random_instance(int m, int n, unsigned seed, int informative = 2,
                                           double separation = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(m, n);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    y[i] = (i % 2 == 0) ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) X(i, j) = g(rng) + (j < informative ? 0.5 * separation * y[i] : 0.0);
  }
  return {X, y};
}

}  // namespace fixtures
