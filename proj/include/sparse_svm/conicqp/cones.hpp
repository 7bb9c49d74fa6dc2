#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sparse_svm::conicqp {

/// Product cone {0}^p x R+^l x Q^{d_1} x ... x Q^{d_k}, laid out in that order.
struct ConeLayout {
  int zero = 0;
  int nonneg = 0;
  std::vector<int> soc_dims;
  std::vector<int> soc_offsets;

  int total() const {
    int t = zero + nonneg;
    for (int d : soc_dims) t += d;
    return t;
  }
  int degree() const { return nonneg + static_cast<int>(soc_dims.size()); }
  int cone_begin() const { return zero; }

  void finalize() {
    soc_offsets.clear();
    int off = zero + nonneg;
    for (int d : soc_dims) {
      soc_offsets.push_back(off);
      off += d;
    }
  }
};

namespace soc {

inline double residual(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double t = v.tail(v.size() - 1).norm();
  return (v[0] - t) * (v[0] + t);
}

/// Largest alpha >= 0 with v + alpha d in the cone, v assumed interior.
inline double max_step(const Eigen::Ref<const Eigen::VectorXd>& v,
                       const Eigen::Ref<const Eigen::VectorXd>& d) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto n = v.size() - 1;
  const double a = d[0] * d[0] - d.tail(n).squaredNorm();
  const double b = v[0] * d[0] - v.tail(n).dot(d.tail(n));
  const double c = std::max(residual(v), 0.0);
  // f(alpha) = a alpha^2 + 2 b alpha + c; the admissible set is [0, first positive root].
  double alpha = inf;
  if (c == 0.0) return b < 0.0 || (b == 0.0 && a < 0.0) ? 0.0 : (d[0] < 0.0 ? -v[0] / d[0] : inf);
  const double scale = std::max({std::abs(a), std::abs(b), c, 1e-300});
  if (std::abs(a) <= 1e-14 * scale) {
    if (b < 0.0) alpha = -c / (2.0 * b);
  } else {
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -(b + std::copysign(sq, b));
      double r1 = inf, r2 = inf;
      if (qq != 0.0) {
        r1 = qq / a;
        r2 = c / qq;
      } else {
        r1 = -b / a;
      }
      for (double r : {r1, r2})
        if (r > 0.0) alpha = std::min(alpha, r);
    }
  }
  // Also stay on the positive nappe.
  if (d[0] < 0.0) alpha = std::min(alpha, -v[0] / d[0]);
  return alpha;
}

/// Jordan product u o v.
inline void product(const Eigen::Ref<const Eigen::VectorXd>& u,
                    const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Ref<Eigen::VectorXd> out) {
  const auto n = u.size() - 1;
  const double head = u.dot(v);
  out.tail(n) = u[0] * v.tail(n) + v[0] * u.tail(n);
  out[0] = head;
}

/// Solves lambda o x = d for x.
inline void inverse_product(const Eigen::Ref<const Eigen::VectorXd>& lambda,
                            const Eigen::Ref<const Eigen::VectorXd>& d, Eigen::Ref<Eigen::VectorXd> out) {
  const auto n = lambda.size() - 1;
  const double det = residual(lambda);
  const double x0 = (lambda[0] * d[0] - lambda.tail(n).dot(d.tail(n))) / det;
  out.tail(n) = (d.tail(n) - x0 * lambda.tail(n)) / lambda[0];
  out[0] = x0;
}

}  // namespace soc

/// Nesterov-Todd scaling for the non-zero part of the cone.
class NtScaling {
 public:
  void update(const ConeLayout& layout, const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
    layout_ = &layout;
    const int m = layout.total();
    lambda_.setZero(m);
    orth_w_.resize(layout.nonneg);
    for (int i = 0; i < layout.nonneg; ++i) {
      const int r = layout.zero + i;
      orth_w_[i] = std::sqrt(s[r] / z[r]);
      lambda_[r] = std::sqrt(s[r] * z[r]);
    }
    const auto k = layout.soc_dims.size();
    eta_.resize(k);
    wbar_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      const int off = layout.soc_offsets[c], d = layout.soc_dims[c];
      const Eigen::VectorXd sc = s.segment(off, d), zc = z.segment(off, d);
      const double sres = std::sqrt(std::max(soc::residual(sc), 1e-300));
      const double zres = std::sqrt(std::max(soc::residual(zc), 1e-300));
      const Eigen::VectorXd sbar = sc / sres, zbar = zc / zres;
      const double gamma = std::sqrt(std::max((1.0 + sbar.dot(zbar)) / 2.0, 1e-300));
      Eigen::VectorXd w(d);
      w[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
      w.tail(d - 1) = (sbar.tail(d - 1) - zbar.tail(d - 1)) / (2.0 * gamma);
      eta_[c] = std::sqrt(sres / zres);
      wbar_[c] = w;
    }
    Eigen::VectorXd tmp = z;
    apply_w(tmp);
    lambda_.tail(m - layout.zero) = tmp.tail(m - layout.zero);
  }

  /// v <- W v on cone rows (zero rows untouched).
  void apply_w(Eigen::VectorXd& v) const { apply(v, false); }
  /// v <- W^{-1} v on cone rows.
  void apply_w_inv(Eigen::VectorXd& v) const { apply(v, true); }

  const Eigen::VectorXd& lambda() const { return lambda_; }

  /// Dense H = W'W for SOC block c.
  Eigen::MatrixXd soc_h(std::size_t c) const {
    const Eigen::MatrixXd W = soc_w_dense(c);
    return W * W;
  }
  double orth_h(int i) const { return orth_w_[i] * orth_w_[i]; }

 private:
  Eigen::MatrixXd soc_w_dense(std::size_t c) const {
    const Eigen::VectorXd& w = wbar_[c];
    const auto d = w.size();
    Eigen::MatrixXd W(d, d);
    W(0, 0) = w[0];
    W.block(0, 1, 1, d - 1) = w.tail(d - 1).transpose();
    W.block(1, 0, d - 1, 1) = w.tail(d - 1);
    W.block(1, 1, d - 1, d - 1) = Eigen::MatrixXd::Identity(d - 1, d - 1) +
                                  w.tail(d - 1) * w.tail(d - 1).transpose() / (1.0 + w[0]);
    return eta_[c] * W;
  }

  void apply(Eigen::VectorXd& v, bool inverse) const {
    const ConeLayout& L = *layout_;
    for (int i = 0; i < L.nonneg; ++i) {
      const int r = L.zero + i;
      v[r] = inverse ? v[r] / orth_w_[i] : v[r] * orth_w_[i];
    }
    for (std::size_t c = 0; c < wbar_.size(); ++c) {
      const int off = L.soc_offsets[c], d = L.soc_dims[c];
      const Eigen::VectorXd& w = wbar_[c];
      auto seg = v.segment(off, d);
      const double v0 = seg[0];
      const double wv = w.tail(d - 1).dot(seg.tail(d - 1));
      const double sign = inverse ? -1.0 : 1.0;
      const double head = w[0] * v0 + sign * wv;
      Eigen::VectorXd tail = sign * v0 * w.tail(d - 1) + seg.tail(d - 1) +
                             (wv / (1.0 + w[0])) * w.tail(d - 1);
      const double scale = inverse ? 1.0 / eta_[c] : eta_[c];
      seg[0] = scale * head;
      seg.tail(d - 1) = scale * tail;
    }
  }

  const ConeLayout* layout_ = nullptr;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd orth_w_;
  std::vector<double> eta_;
  std::vector<Eigen::VectorXd> wbar_;
};

/// Jordan product over cone rows; zero rows of `out` are set to 0.
inline void cone_product(const ConeLayout& L, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                         Eigen::VectorXd& out) {
  out.setZero(u.size());
  for (int i = 0; i < L.nonneg; ++i) out[L.zero + i] = u[L.zero + i] * v[L.zero + i];
  for (std::size_t c = 0; c < L.soc_dims.size(); ++c) {
    const int off = L.soc_offsets[c], d = L.soc_dims[c];
    soc::product(u.segment(off, d), v.segment(off, d), out.segment(off, d));
  }
}

inline void cone_inverse_product(const ConeLayout& L, const Eigen::VectorXd& lambda,
                                 const Eigen::VectorXd& d, Eigen::VectorXd& out) {
  out.setZero(d.size());
  for (int i = 0; i < L.nonneg; ++i) out[L.zero + i] = d[L.zero + i] / lambda[L.zero + i];
  for (std::size_t c = 0; c < L.soc_dims.size(); ++c) {
    const int off = L.soc_offsets[c], dim = L.soc_dims[c];
    soc::inverse_product(lambda.segment(off, dim), d.segment(off, dim), out.segment(off, dim));
  }
}

/// Adds alpha * e (cone identity) to the cone rows.
inline void add_identity(const ConeLayout& L, Eigen::VectorXd& v, double alpha) {
  for (int i = 0; i < L.nonneg; ++i) v[L.zero + i] += alpha;
  for (std::size_t c = 0; c < L.soc_dims.size(); ++c) v[L.soc_offsets[c]] += alpha;
}

/// Largest t with v + t e on the boundary (negative when v is interior).
inline double interior_violation(const ConeLayout& L, const Eigen::VectorXd& v) {
  double alpha = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < L.nonneg; ++i) alpha = std::max(alpha, -v[L.zero + i]);
  for (std::size_t c = 0; c < L.soc_dims.size(); ++c) {
    const int off = L.soc_offsets[c], d = L.soc_dims[c];
    alpha = std::max(alpha, v.segment(off + 1, d - 1).norm() - v[off]);
  }
  return alpha;
}

inline double max_step(const ConeLayout& L, const Eigen::VectorXd& v, const Eigen::VectorXd& d) {
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < L.nonneg; ++i) {
    const int r = L.zero + i;
    if (d[r] < 0.0) alpha = std::min(alpha, -v[r] / d[r]);
  }
  for (std::size_t c = 0; c < L.soc_dims.size(); ++c) {
    const int off = L.soc_offsets[c], dim = L.soc_dims[c];
    alpha = std::min(alpha, soc::max_step(v.segment(off, dim), d.segment(off, dim)));
  }
  return alpha;
}

inline double cone_dot(const ConeLayout& L, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const int m = L.total();
  return u.tail(m - L.zero).dot(v.tail(m - L.zero));
}

}  // namespace sparse_svm::conicqp
