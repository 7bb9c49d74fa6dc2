#pragma once

#include "sparse_svm/core.hpp"

#include <Eigen/Core>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

#include <cmath>
#include <vector>

namespace sparse_svm::conicqp {

/// Up-looking LDL' factorization of a quasi-definite matrix given by its
/// upper triangle. The pattern is analysed once (AMD ordering + elimination
/// tree); refactor() accepts new values on the same pattern.
///
/// Each pivot carries an expected sign (+1 for the primal block, -1 for the
/// dual block). A pivot with the wrong sign or magnitude below
/// `dynamic_eps` is replaced by sign * dynamic_delta.
class QuasiDefiniteLdl {
 public:
  using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  double dynamic_eps = 1e-13;
  double dynamic_delta = 2e-7;

  void analyze(const SpMat& upper, const std::vector<int>& signs) {
    n_ = static_cast<int>(upper.rows());
    Eigen::AMDOrdering<int> amd;
    // Eigen's orderings return the inverse permutation.
    amd(upper.selfadjointView<Eigen::Upper>(), inv_perm_);
    perm_ = inv_perm_.inverse();

    // Value positions in the permuted matrix, recovered by twisting a matrix
    // whose values are original positions.
    SpMat tagged = upper;
    for (int k = 0; k < tagged.nonZeros(); ++k) tagged.valuePtr()[k] = static_cast<double>(k + 1);
    SpMat permuted(n_, n_);
    permuted.selfadjointView<Eigen::Upper>() = tagged.selfadjointView<Eigen::Upper>().twistedBy(perm_);
    permuted.makeCompressed();
    Ap_.assign(permuted.outerIndexPtr(), permuted.outerIndexPtr() + n_ + 1);
    Ai_.assign(permuted.innerIndexPtr(), permuted.innerIndexPtr() + permuted.nonZeros());
    source_.resize(permuted.nonZeros());
    for (int k = 0; k < permuted.nonZeros(); ++k)
      source_[k] = static_cast<int>(std::lround(permuted.valuePtr()[k])) - 1;
    Ax_.assign(permuted.nonZeros(), 0.0);

    signs_.resize(n_);
    for (int i = 0; i < n_; ++i) signs_[perm_.indices()[i]] = signs[i];

    // Elimination tree and column counts.
    parent_.assign(n_, -1);
    lnz_.assign(n_, 0);
    flag_.assign(n_, -1);
    for (int k = 0; k < n_; ++k) {
      flag_[k] = k;
      for (int p = Ap_[k]; p < Ap_[k + 1]; ++p) {
        int i = Ai_[p];
        if (i >= k) continue;
        for (; flag_[i] != k; i = parent_[i]) {
          if (parent_[i] == -1) parent_[i] = k;
          ++lnz_[i];
          flag_[i] = k;
        }
      }
    }
    Lp_.assign(n_ + 1, 0);
    for (int k = 0; k < n_; ++k) Lp_[k + 1] = Lp_[k] + lnz_[k];
    Li_.assign(Lp_[n_], 0);
    Lx_.assign(Lp_[n_], 0.0);
    D_.assign(n_, 0.0);
    y_.assign(n_, 0.0);
    pattern_.assign(n_, 0);
    analyzed_ = true;
  }

  /// Numeric factorization; `values` is the value array of the matrix passed
  /// to analyze() (same pattern). Returns the number of regularized pivots.
  int refactor(const double* values) {
    if (!analyzed_) throw NumericalBreakdown("LDL factorization used before analysis");
    for (std::size_t k = 0; k < source_.size(); ++k) Ax_[k] = values[source_[k]];
    int bumped = 0;
    std::fill(lnz_.begin(), lnz_.end(), 0);
    for (int k = 0; k < n_; ++k) {
      y_[k] = 0.0;
      int top = n_;
      flag_[k] = k;
      for (int p = Ap_[k]; p < Ap_[k + 1]; ++p) {
        int i = Ai_[p];
        if (i > k) continue;
        y_[i] += Ax_[p];
        int len = 0;
        for (; flag_[i] != k; i = parent_[i]) {
          pattern_[len++] = i;
          flag_[i] = k;
        }
        while (len > 0) pattern_[--top] = pattern_[--len];
      }
      double d = y_[k];
      y_[k] = 0.0;
      for (; top < n_; ++top) {
        const int i = pattern_[top];
        const double yi = y_[i];
        y_[i] = 0.0;
        const int p2 = Lp_[i] + lnz_[i];
        for (int p = Lp_[i]; p < p2; ++p) y_[Li_[p]] -= Lx_[p] * yi;
        const double lki = yi / D_[i];
        d -= lki * yi;
        Li_[p2] = k;
        Lx_[p2] = lki;
        ++lnz_[i];
      }
      if (signs_[k] * d <= dynamic_eps || !std::isfinite(d)) {
        if (!std::isfinite(d)) throw NumericalBreakdown("non-finite pivot in LDL factorization");
        d = signs_[k] * dynamic_delta;
        ++bumped;
      }
      D_[k] = d;
    }
    return bumped;
  }

  /// Solves (P' L D L' P) x = b in place.
  void solve(Eigen::VectorXd& x) const {
    Eigen::VectorXd w = perm_ * x;
    for (int j = 0; j < n_; ++j) {
      const double wj = w[j];
      for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) w[Li_[p]] -= Lx_[p] * wj;
    }
    for (int j = 0; j < n_; ++j) w[j] /= D_[j];
    for (int j = n_ - 1; j >= 0; --j) {
      double wj = w[j];
      for (int p = Lp_[j]; p < Lp_[j + 1]; ++p) wj -= Lx_[p] * w[Li_[p]];
      w[j] = wj;
    }
    x = inv_perm_ * w;
  }

  int size() const { return n_; }
  long factor_nonzeros() const { return Lp_.empty() ? 0 : Lp_.back(); }

 private:
  int n_ = 0;
  bool analyzed_ = false;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> inv_perm_;
  std::vector<int> Ap_, Ai_, source_;
  std::vector<double> Ax_;
  std::vector<int> signs_;
  std::vector<int> parent_, lnz_, flag_, Lp_, Li_, pattern_;
  std::vector<double> Lx_, D_, y_;
};

}  // namespace sparse_svm::conicqp
