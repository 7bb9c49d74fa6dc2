#pragma once

#include "sparse_svm/conicqp/ipm.hpp"
#include "sparse_svm/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <optional>
#include <thread>
#include <vector>

namespace sparse_svm {

/// A conic subproblem did not reach Optimal where the caller needs a certified value.
class SolveFailed : public Error {
 public:
  SolveFailed(const std::string& what, conicqp::ConicStatus status)
      : Error(what + ": " + conicqp::to_string(status)), status_(status) {}
  conicqp::ConicStatus status() const { return status_; }

 private:
  conicqp::ConicStatus status_;
};

namespace svm_detail {

inline std::vector<int> all_features(Eigen::Index n) {
  std::vector<int> a(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = static_cast<int>(j);
  return a;
}

inline void check_active(const std::vector<int>& active, Eigen::Index n) {
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (active[k] < 0 || active[k] >= n) throw InvalidArgument("feature index out of range");
    if (k > 0 && active[k] <= active[k - 1]) throw InvalidArgument("feature set must be sorted and unique");
  }
}

}  // namespace svm_detail

/// Conic form of the soft-margin SVM over the columns in `active`.
/// Variables: w (one per active column), b, then xi_1..xi_m.
inline conicqp::ConicProgram svm_program(const Dataset& data, double C, const std::vector<int>& active) {
  using namespace conicqp;
  const int m = static_cast<int>(data.m());
  const int k = static_cast<int>(active.size());
  ConicProgram p;
  for (int j = 0; j < k; ++j) {
    p.add_variable();
    p.add_quadratic(j, j, 1.0);
  }
  const int b = p.add_variable();
  for (int i = 0; i < m; ++i) p.add_variable(0.0, kInf, C);
  for (int i = 0; i < m; ++i) {
    const double yi = data.y()[i];
    std::vector<LinearTerm> row;
    row.reserve(static_cast<std::size_t>(k) + 2);
    for (int j = 0; j < k; ++j) {
      const double v = data.X()(i, active[static_cast<std::size_t>(j)]);
      if (v != 0.0) row.push_back({j, yi * v});
    }
    row.push_back({b, yi});
    row.push_back({b + 1 + i, 1.0});
    p.add_row(row, RowSense::kGreaterEqual, 1.0);
  }
  return p;
}

/// Optimal soft-margin SVM with w_j = 0 for j outside `active` (all features
/// when absent). Restriction drops columns rather than fixing them.
inline PrimalPoint solve_svm(const Dataset& data, double C, const std::optional<std::vector<int>>& active = {},
                             const conicqp::IpmSettings& ipm = {}) {
  if (!(C > 0.0)) throw InvalidArgument("C must be positive");
  const std::vector<int> cols = active ? *active : svm_detail::all_features(data.n());
  svm_detail::check_active(cols, data.n());
  const auto sol = conicqp::solve(svm_program(data, C, cols), ipm);
  if (!sol.optimal()) throw SolveFailed("SVM subproblem", sol.status);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.n());
  for (std::size_t j = 0; j < cols.size(); ++j) w[cols[j]] = sol.x[static_cast<Eigen::Index>(j)];
  return make_point(std::move(w), sol.x[static_cast<Eigen::Index>(cols.size())], data, C);
}

/// Fraction of samples with sgn(w'x + b) = y, where sgn(0) = +1.
inline double accuracy(const PrimalPoint& point, const Dataset& data) {
  if (point.w.size() != data.n()) throw DimensionMismatch("point/data size");
  const Eigen::VectorXd score = (data.X() * point.w).array() + point.b;
  Eigen::Index hit = 0;
  for (Eigen::Index i = 0; i < data.m(); ++i) hit += ((score[i] >= 0.0 ? 1.0 : -1.0) == data.y()[i]);
  return static_cast<double>(hit) / static_cast<double>(data.m());
}

struct BruteForceResult {
  std::vector<int> subset;
  PrimalPoint point;
  long subsets_evaluated = 0;
};

/// Number of worker threads for embarrassingly parallel loops:
/// SPARSE_SVM_THREADS if set, else the hardware concurrency.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("SPARSE_SVM_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Lexicographic enumeration of size-k subsets of {0..n-1}.
inline bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  int i = k - 1;
  while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++c[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

/// Exhaustive oracle for the budgeted problem: every subset of size exactly B.
/// Objectives within `tie_tol` (relative) count as ties and the
/// lexicographically smaller subset wins, so the output does not depend on
/// solver noise or thread scheduling.
inline BruteForceResult brute_force_fs(const Dataset& data, double C, int B, int max_n = 20,
                                       const conicqp::IpmSettings& ipm = {}, double tie_tol = 1e-7) {
  const int n = static_cast<int>(data.n());
  if (n > max_n)
    throw GuardExceeded("brute force limited to n <= " + std::to_string(max_n) + ", got n = " +
                        std::to_string(n));
  if (B < 1 || B > n) throw InvalidArgument("B must satisfy 1 <= B <= n");
  if (!(C > 0.0)) throw InvalidArgument("C must be positive");

  std::vector<std::vector<int>> subsets;
  std::vector<int> c(static_cast<std::size_t>(B));
  for (int j = 0; j < B; ++j) c[static_cast<std::size_t>(j)] = j;
  do subsets.push_back(c);
  while (next_combination(c, n));

  std::vector<PrimalPoint> points(subsets.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::size_t i; !failed && (i = next++) < subsets.size();) points[i] = solve_svm(data, C, subsets[i], ipm);
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  const unsigned nt = std::min<unsigned>(worker_threads(), static_cast<unsigned>(subsets.size()));
  if (nt <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::size_t best = 0;
  for (std::size_t i = 1; i < subsets.size(); ++i) {
    const double cur = points[best].objective;
    if (points[i].objective < cur - tie_tol * std::max(1.0, std::abs(cur))) best = i;
  }
  return {subsets[best], points[best], static_cast<long>(subsets.size())};
}

}  // namespace sparse_svm
