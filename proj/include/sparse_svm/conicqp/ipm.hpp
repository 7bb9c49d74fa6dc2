#pragma once

#include "sparse_svm/conicqp/cones.hpp"
#include "sparse_svm/conicqp/ldl.hpp"
#include "sparse_svm/conicqp/program.hpp"
#include "sparse_svm/conicqp/standard_form.hpp"

#include <Eigen/SparseCore>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sparse_svm::conicqp {

enum class ConicStatus { kOptimal, kInfeasible, kUnbounded, kIterLimit, kTimeLimit };

inline const char* to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::kOptimal: return "Optimal";
    case ConicStatus::kInfeasible: return "Infeasible";
    case ConicStatus::kUnbounded: return "Unbounded";
    case ConicStatus::kIterLimit: return "IterLimit";
    case ConicStatus::kTimeLimit: return "TimeLimit";
  }
  return "?";
}

struct IpmSettings {
  double tol = 1e-8;
  int max_iter = 200;
  double time_limit_s = std::numeric_limits<double>::infinity();
  double static_reg = 1e-7;
  double infeasibility_tol = 1e-8;
  double step_fraction = 0.99;
  int refine_steps = 10;
};

/// Multipliers grouped by constraint class of the original program. Row and
/// bound multipliers are non-negative for inequalities; equality rows carry a
/// free sign. Cone multipliers are the dual cone vectors in (a+b, a-b, sqrt2 x)
/// coordinates.
struct ConicDuals {
  Eigen::VectorXd rows;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<Eigen::VectorXd> cones;
};

struct ConicResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
};

struct ConicSolution {
  ConicStatus status = ConicStatus::kIterLimit;
  Eigen::VectorXd x;
  ConicDuals duals;
  double primal_obj = std::numeric_limits<double>::quiet_NaN();
  double dual_obj = std::numeric_limits<double>::quiet_NaN();
  ConicResiduals residuals;
  /// For Infeasible / Unbounded: how far the returned ray is from an exact certificate.
  double certificate_violation = 0.0;
  std::string message;
  int iterations = 0;
  double wall_time_s = 0.0;

  // Internal iterate in the presolved space, used for warm starts.
  Eigen::VectorXd std_x, std_s, std_z;

  bool optimal() const { return status == ConicStatus::kOptimal; }
  /// Valid lower bound on the optimum at an Optimal point.
  double lower_bound() const { return std::min(primal_obj, dual_obj); }
};

namespace detail {

class HsdeSolver {
 public:
  HsdeSolver(const StandardForm& sf, const IpmSettings& settings) : sf_(sf), set_(settings) {
    n_ = sf.n;
    m_ = static_cast<int>(sf.A.rows());
    L_ = &sf.cones;
    Eigen::SparseMatrix<double> Pt = sf.P.transpose();
    Pfull_ = sf.P + Pt;
    for (int j = 0; j < n_; ++j) Pfull_.coeffRef(j, j) *= 0.5;
    Pfull_.prune(0.0);
    At_ = sf.A.transpose();
    build_pattern();
  }

  ConicSolution run(const std::optional<ConicSolution>& warm) {
    start_ = std::chrono::steady_clock::now();
    ConicSolution sol;
    initialize(warm);

    const double qn = std::max(1.0, inf_norm(sf_.q));
    const double bn = std::max(1.0, inf_norm(sf_.b));
    Eigen::VectorXd rx(n_), rz(m_), Px(n_), Atz(n_), Ax(m_);
    int iter = 0;
    int stall = 0;
    double best_merit = std::numeric_limits<double>::infinity();

    for (;; ++iter) {
      Px = Pfull_ * x_;
      Atz = At_ * z_;
      Ax = sf_.A * x_;
      rx = Px + Atz + sf_.q * tau_;
      rz = Ax + s_ - sf_.b * tau_;
      const double xPx = x_.dot(Px);
      const double rtau = sf_.q.dot(x_) + sf_.b.dot(z_) + kappa_ + xPx / tau_;
      const double mu = (cone_dot(*L_, s_, z_) + tau_ * kappa_) / (L_->degree() + 1);

      // Convergence on the normalized point.
      const double pobj = (0.5 * xPx / tau_ + sf_.q.dot(x_)) / tau_;
      const double dobj = (-0.5 * xPx / tau_ - sf_.b.dot(z_)) / tau_;
      const double pres = inf_norm(rz) / tau_ /
                          std::max({bn, inf_norm(Ax) / tau_, inf_norm(s_) / tau_});
      const double dres = inf_norm(rx) / tau_ /
                          std::max({qn, inf_norm(Px) / tau_, inf_norm(Atz) / tau_});
      const double gap = std::abs(pobj - dobj);
      sol.residuals = {pres, dres, cone_dot(*L_, s_, z_) / (tau_ * tau_)};
      sol.iterations = iter;
      if (pres <= set_.tol && dres <= set_.tol && gap <= set_.tol * (1.0 + std::abs(pobj))) {
        sol.status = ConicStatus::kOptimal;
        break;
      }
      // Infeasibility certificates on the unnormalized iterate.
      const double btz = sf_.b.dot(z_);
      if (btz < 0.0) {
        const double viol = inf_norm(Atz) / -btz;
        if (viol <= set_.infeasibility_tol && tau_ < kappa_) {
          sol.status = ConicStatus::kInfeasible;
          sol.certificate_violation = viol;
          break;
        }
      }
      const double qtx = sf_.q.dot(x_);
      if (qtx < 0.0) {
        const double viol = std::max(inf_norm(Px), inf_norm(Ax + s_)) / -qtx;
        if (viol <= set_.infeasibility_tol && tau_ < kappa_) {
          sol.status = ConicStatus::kUnbounded;
          sol.certificate_violation = viol;
          break;
        }
      }
      if (iter >= set_.max_iter) {
        sol.status = ConicStatus::kIterLimit;
        sol.message = "iteration limit";
        break;
      }
      if (elapsed() > set_.time_limit_s) {
        sol.status = ConicStatus::kTimeLimit;
        sol.message = "time limit";
        break;
      }
      const double merit = std::max({pres, dres, gap / (1.0 + std::abs(pobj))});
      if (merit < 0.5 * best_merit) {
        best_merit = merit;
        stall = 0;
      } else if (++stall > 30) {
        sol.status = ConicStatus::kIterLimit;
        sol.message = "stalled";
        break;
      }

      // Scaling and factorization.
      nt_.update(*L_, s_, z_);
      try {
        factor();
      } catch (const NumericalBreakdown&) {
        sol.status = ConicStatus::kIterLimit;
        sol.message = "numerical breakdown";
        break;
      }
      const Eigen::VectorXd& lambda = nt_.lambda();
      const Eigen::VectorXd xi = x_ / tau_;
      const Eigen::VectorXd q2 = sf_.q + 2.0 * (Pfull_ * xi);
      const double xiPxi = xi.dot(Pfull_ * xi);

      // Constant system K [x1; z1] = [-q; b].
      Eigen::VectorXd x1(n_), z1(m_);
      kkt_solve(-sf_.q, sf_.b, x1, z1);
      const double denom = q2.dot(x1) + sf_.b.dot(z1) - xiPxi - kappa_ / tau_;

      auto direction = [&](const Eigen::VectorXd& dx, const Eigen::VectorXd& dz, double dtau,
                           const Eigen::VectorXd& ds, double dkappa, Eigen::VectorXd& Dx,
                           Eigen::VectorXd& Dz, Eigen::VectorXd& Ds, double& Dtau, double& Dkappa) {
        Eigen::VectorXd t;
        cone_inverse_product(*L_, lambda, ds, t);
        nt_.apply_w(t);  // W (lambda \ ds), zero rows are 0
        Eigen::VectorXd x2(n_), z2(m_);
        kkt_solve(-dx, -dz + t, x2, z2);
        Dtau = (-dtau + dkappa / tau_ - q2.dot(x2) - sf_.b.dot(z2)) / denom;
        Dx = x2 + Dtau * x1;
        Dz = z2 + Dtau * z1;
        Ds = -t - apply_h(Dz);
        Ds.head(L_->zero).setZero();
        Dkappa = (-dkappa - kappa_ * Dtau) / tau_;
      };

      auto step_length = [&](const Eigen::VectorXd& Ds, const Eigen::VectorXd& Dz, double Dtau,
                             double Dkappa) {
        double a = std::min(max_step(*L_, s_, Ds), max_step(*L_, z_, Dz));
        if (Dtau < 0.0) a = std::min(a, -tau_ / Dtau);
        if (Dkappa < 0.0) a = std::min(a, -kappa_ / Dkappa);
        return a;
      };

      // Predictor.
      Eigen::VectorXd ds_aff;
      cone_product(*L_, lambda, lambda, ds_aff);
      Eigen::VectorXd Dxa, Dza, Dsa;
      double Dta = 0.0, Dka = 0.0;
      direction(rx, rz, rtau, ds_aff, tau_ * kappa_, Dxa, Dza, Dsa, Dta, Dka);
      const double alpha_aff = std::min(1.0, step_length(Dsa, Dza, Dta, Dka));
      const double sigma = std::pow(1.0 - alpha_aff, 3);

      // Corrector.
      Eigen::VectorXd ws = Dsa, wz = Dza, corr;
      nt_.apply_w_inv(ws);
      nt_.apply_w(wz);
      cone_product(*L_, ws, wz, corr);
      Eigen::VectorXd ds = ds_aff + corr;
      add_identity(*L_, ds, -sigma * mu);
      const double dkappa = tau_ * kappa_ + Dta * Dka - sigma * mu;
      Eigen::VectorXd Dx, Dz, Ds;
      double Dt = 0.0, Dk = 0.0;
      direction((1.0 - sigma) * rx, (1.0 - sigma) * rz, (1.0 - sigma) * rtau, ds, dkappa, Dx, Dz, Ds,
                Dt, Dk);
      double alpha = std::min(1.0, set_.step_fraction * step_length(Ds, Dz, Dt, Dk));
      // Backtrack if rounding put the trial point on or outside a cone boundary.
      for (int back = 0; back < 30 && alpha > 0.0; ++back, alpha *= 0.5) {
        const Eigen::VectorXd st = s_ + alpha * Ds, zt = z_ + alpha * Dz;
        if (interior_violation(*L_, st) < 0.0 && interior_violation(*L_, zt) < 0.0 &&
            strictly_interior(st) && strictly_interior(zt))
          break;
      }
      if (!(alpha > 1e-12) || !Dx.allFinite() || !Dz.allFinite()) {
        sol.status = ConicStatus::kIterLimit;
        sol.message = "step failure";
        break;
      }
      x_ += alpha * Dx;
      z_ += alpha * Dz;
      s_ += alpha * Ds;
      tau_ += alpha * Dt;
      kappa_ += alpha * Dk;
      // Guard against the embedding drifting to a huge scale.
      const double scale = std::max({inf_norm(x_), inf_norm(z_), inf_norm(s_), tau_, kappa_});
      if (scale > 1e8) {
        x_ /= scale;
        z_ /= scale;
        s_ /= scale;
        tau_ /= scale;
        kappa_ /= scale;
      }
    }

    sol.std_x = x_ / tau_;
    sol.std_s = s_ / tau_;
    sol.std_z = z_ / tau_;
    if (sol.status == ConicStatus::kInfeasible) {
      sol.std_z = z_ / std::max(1e-300, -sf_.b.dot(z_));
    }
    sol.wall_time_s = elapsed();
    return sol;
  }

 private:
  // Every SOC block keeps a positive computed residual.
  bool strictly_interior(const Eigen::VectorXd& v) const {
    for (std::size_t c = 0; c < L_->soc_dims.size(); ++c)
      if (!(soc::residual(v.segment(L_->soc_offsets[c], L_->soc_dims[c])) > 0.0)) return false;
    return true;
  }

  static double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  // Upper triangle of [P, A'; A, -H] with every diagonal entry and dense SOC
  // blocks present.
  void build_pattern() {
    const int N = n_ + m_;
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < sf_.P.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.P, k); it; ++it)
        if (it.row() <= it.col()) t.emplace_back(it.row(), it.col(), 0.0);
    for (int k = 0; k < sf_.A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.A, k); it; ++it)
        t.emplace_back(it.col(), n_ + it.row(), 0.0);
    for (int i = 0; i < N; ++i) t.emplace_back(i, i, 0.0);
    for (std::size_t c = 0; c < L_->soc_dims.size(); ++c) {
      const int off = n_ + L_->soc_offsets[c], d = L_->soc_dims[c];
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < j; ++i) t.emplace_back(off + i, off + j, 0.0);
    }
    K_.resize(N, N);
    K_.setFromTriplets(t.begin(), t.end());
    K_.makeCompressed();
    auto pos = [this](int i, int j) {
      const int* begin = K_.innerIndexPtr() + K_.outerIndexPtr()[j];
      const int* end = K_.innerIndexPtr() + K_.outerIndexPtr()[j + 1];
      return static_cast<int>(std::lower_bound(begin, end, i) - K_.innerIndexPtr());
    };
    base_.assign(K_.nonZeros(), 0.0);
    for (int k = 0; k < sf_.P.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.P, k); it; ++it)
        if (it.row() <= it.col()) base_[pos(it.row(), it.col())] += it.value();
    for (int k = 0; k < sf_.A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sf_.A, k); it; ++it)
        base_[pos(it.col(), n_ + it.row())] += it.value();
    diag_pos_.resize(N);
    for (int i = 0; i < N; ++i) diag_pos_[i] = pos(i, i);
    soc_pos_.clear();
    for (std::size_t c = 0; c < L_->soc_dims.size(); ++c) {
      const int off = n_ + L_->soc_offsets[c], d = L_->soc_dims[c];
      std::vector<int> p(static_cast<std::size_t>(d) * d, -1);
      for (int j = 0; j < d; ++j)
        for (int i = 0; i <= j; ++i) p[static_cast<std::size_t>(j) * d + i] = pos(off + i, off + j);
      soc_pos_.push_back(std::move(p));
    }
    std::vector<int> signs(N, 1);
    for (int i = n_; i < N; ++i) signs[i] = -1;
    ldl_.analyze(K_, signs);
    values_.resize(K_.nonZeros());
  }

  void set_values(bool init) {
    values_ = base_;
    const double d = reg_;
    for (int i = 0; i < n_; ++i) values_[diag_pos_[i]] += d;
    for (int r = 0; r < L_->zero; ++r) values_[diag_pos_[n_ + r]] -= d;
    for (int i = 0; i < L_->nonneg; ++i) {
      const int r = L_->zero + i;
      values_[diag_pos_[n_ + r]] -= (init ? 1.0 : nt_.orth_h(i)) + d;
    }
    for (std::size_t c = 0; c < L_->soc_dims.size(); ++c) {
      const int d_c = L_->soc_dims[c];
      const Eigen::MatrixXd H = init ? Eigen::MatrixXd::Identity(d_c, d_c) : nt_.soc_h(c);
      for (int j = 0; j < d_c; ++j)
        for (int i = 0; i <= j; ++i) {
          values_[soc_pos_[c][static_cast<std::size_t>(j) * d_c + i]] -= H(i, j) + (i == j ? d : 0.0);
        }
    }
    init_mode_ = init;
  }

  void factor(bool init = false) {
    // Escalate the regularization when the factorization breaks down; the
    // refinement in kkt_solve works against the unregularized matrix.
    for (reg_ = set_.static_reg;; reg_ *= 100.0) {
      set_values(init);
      try {
        ldl_.refactor(values_.data());
        return;
      } catch (const NumericalBreakdown&) {
        if (reg_ > 1e-3) throw;
      }
    }
  }

  Eigen::VectorXd apply_h(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    if (init_mode_) {
      out.tail(m_ - L_->zero) = v.tail(m_ - L_->zero);
      return out;
    }
    Eigen::VectorXd t = v;
    nt_.apply_w(t);
    nt_.apply_w(t);
    out.tail(m_ - L_->zero) = t.tail(m_ - L_->zero);
    return out;
  }

  // Solves the unregularized system [P A'; A -H][x; z] = [rx; rz] using the
  // regularized factor plus iterative refinement.
  void kkt_solve(const Eigen::VectorXd& rx, const Eigen::VectorXd& rz, Eigen::VectorXd& x,
                 Eigen::VectorXd& z) const {
    const int N = n_ + m_;
    Eigen::VectorXd rhs(N);
    rhs << rx, rz;
    Eigen::VectorXd sol = rhs;
    ldl_.solve(sol);
    const double rhs_norm = inf_norm(rhs);
    for (int it = 0; it < set_.refine_steps; ++it) {
      const Eigen::VectorXd xs = sol.head(n_), zs = sol.tail(m_);
      Eigen::VectorXd res(N);
      res.head(n_) = rx - (Pfull_ * xs + At_ * zs);
      res.tail(m_) = rz - (sf_.A * xs - apply_h(zs));
      const double rn = inf_norm(res);
      if (rn <= 1e-14 * (1.0 + rhs_norm)) break;
      Eigen::VectorXd corr = res;
      ldl_.solve(corr);
      const Eigen::VectorXd trial = sol + corr;
      Eigen::VectorXd res2(N);
      res2.head(n_) = rx - (Pfull_ * trial.head(n_) + At_ * trial.tail(m_));
      res2.tail(m_) = rz - (sf_.A * trial.head(n_) - apply_h(trial.tail(m_)));
      if (inf_norm(res2) >= rn) break;
      sol = trial;
    }
    x = sol.head(n_);
    z = sol.tail(m_);
  }

  void shift_interior(Eigen::VectorXd& v) const {
    const double viol = interior_violation(*L_, v);
    if (viol >= 0.0 || !std::isfinite(viol)) add_identity(*L_, v, 1.0 + std::max(viol, 0.0));
  }

  void initialize(const std::optional<ConicSolution>& warm) {
    x_.setZero(n_);
    s_.setZero(m_);
    z_.setZero(m_);
    tau_ = kappa_ = 1.0;
    if (warm && warm->std_x.size() == n_ && warm->std_z.size() == m_ && warm->std_s.size() == m_) {
      x_ = warm->std_x;
      s_ = sf_.b - sf_.A * x_;
      s_.head(L_->zero).setZero();
      z_ = warm->std_z;
      // Push toward the centre so the iterate is safely interior.
      add_identity(*L_, s_, 0.0);
      const double sv = interior_violation(*L_, s_), zv = interior_violation(*L_, z_);
      add_identity(*L_, s_, std::max(sv, 0.0) + 1e-2);
      add_identity(*L_, z_, std::max(zv, 0.0) + 1e-2);
      return;
    }
    factor(true);
    kkt_solve_init();
    s_ = -z_;
    s_.head(L_->zero).setZero();
    shift_interior(s_);
    shift_interior(z_);
  }

  void kkt_solve_init() {
    Eigen::VectorXd rhs(n_ + m_);
    rhs << -sf_.q, sf_.b;
    ldl_.solve(rhs);
    x_ = rhs.head(n_);
    z_ = rhs.tail(m_);
  }

  const StandardForm& sf_;
  IpmSettings set_;
  int n_ = 0, m_ = 0;
  const ConeLayout* L_ = nullptr;
  Eigen::SparseMatrix<double> Pfull_, At_;
  QuasiDefiniteLdl::SpMat K_;
  std::vector<double> base_, values_;
  std::vector<int> diag_pos_;
  std::vector<std::vector<int>> soc_pos_;
  QuasiDefiniteLdl ldl_;
  NtScaling nt_;
  bool init_mode_ = false;
  double reg_ = 0.0;
  Eigen::VectorXd x_, s_, z_;
  double tau_ = 1.0, kappa_ = 1.0;
  std::chrono::steady_clock::time_point start_;
};

inline ConicSolution finish(const ConicProgram& prog, const StandardForm& sf, ConicSolution sol) {
  sol.x = sf.expand(sol.std_x.size() == sf.n ? sol.std_x : Eigen::VectorXd::Zero(sf.n));
  sol.duals.rows = Eigen::VectorXd::Zero(prog.num_rows());
  sol.duals.lower = Eigen::VectorXd::Zero(prog.num_vars());
  sol.duals.upper = Eigen::VectorXd::Zero(prog.num_vars());
  sol.duals.cones.assign(prog.cones().size(), Eigen::VectorXd());
  for (std::size_t k = 0; k < prog.cones().size(); ++k)
    sol.duals.cones[k] = Eigen::VectorXd::Zero(2 + static_cast<Eigen::Index>(prog.cones()[k].x.size()));
  if (sol.std_z.size() == static_cast<Eigen::Index>(sf.origin.size())) {
    for (std::size_t r = 0; r < sf.origin.size(); ++r) {
      const RowOrigin& o = sf.origin[r];
      const double z = sol.std_z[static_cast<Eigen::Index>(r)];
      switch (o.kind) {
        case RowOrigin::Kind::kRow:
          sol.duals.rows[o.index] = z;
          break;
        case RowOrigin::Kind::kLower: sol.duals.lower[o.index] = z; break;
        case RowOrigin::Kind::kUpper: sol.duals.upper[o.index] = z; break;
        case RowOrigin::Kind::kCone: sol.duals.cones[o.index][o.component] = z; break;
        case RowOrigin::Kind::kDerived: break;
      }
    }
  }
  if (sol.status == ConicStatus::kOptimal || sol.status == ConicStatus::kIterLimit ||
      sol.status == ConicStatus::kTimeLimit) {
    sol.primal_obj = prog.objective(sol.x);
    if (sol.std_x.size() == sf.n && sol.std_z.size() == sf.b.size()) {
      Eigen::SparseMatrix<double> Pt = sf.P.transpose();
      Eigen::SparseMatrix<double> Pfull = sf.P + Pt;
      Eigen::VectorXd Px = Pfull * sol.std_x;
      for (int j = 0; j < sf.n; ++j) Px[j] -= sf.P.coeff(j, j) * sol.std_x[j];
      sol.dual_obj = -0.5 * sol.std_x.dot(Px) - sf.b.dot(sol.std_z) + sf.offset;
    }
  } else if (sol.status == ConicStatus::kInfeasible) {
    sol.primal_obj = std::numeric_limits<double>::infinity();
    sol.dual_obj = std::numeric_limits<double>::infinity();
  } else if (sol.status == ConicStatus::kUnbounded) {
    sol.primal_obj = -std::numeric_limits<double>::infinity();
    sol.dual_obj = -std::numeric_limits<double>::infinity();
  }
  return sol;
}

// No free variables left after presolve: the program is a feasibility check.
inline ConicSolution solve_constant(const ConicProgram& prog, const StandardForm& sf, double tol) {
  ConicSolution sol;
  sol.std_x = Eigen::VectorXd::Zero(0);
  sol.std_s = sf.b;
  sol.std_z = Eigen::VectorXd::Zero(sf.b.size());
  const ConeLayout& L = sf.cones;
  double viol = 0.0;
  for (int r = 0; r < L.zero; ++r) viol = std::max(viol, std::abs(sf.b[r]));
  viol = std::max(viol, interior_violation(L, sf.b));
  sol.status = viol <= tol * (1.0 + sf.b.lpNorm<Eigen::Infinity>()) ? ConicStatus::kOptimal
                                                                      : ConicStatus::kInfeasible;
  sol.certificate_violation = viol;
  return finish(prog, sf, sol);
}

inline ConicSolution solve_impl(const ConicProgram& prog, const IpmSettings& settings,
                                const std::optional<ConicSolution>& warm) {
  if (!(settings.tol > 0.0) || settings.max_iter < 1) throw InvalidArgument("bad IPM settings");
  prog.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const StandardForm sf = to_standard_form(prog);
  ConicSolution sol;
  if (sf.infeasible) {
    sol.status = ConicStatus::kInfeasible;
    sol.message = "presolve: " + sf.infeasible_reason;
    sol = finish(prog, sf, sol);
  } else if (sf.n == 0) {
    sol = solve_constant(prog, sf, settings.tol);
  } else {
    HsdeSolver solver(sf, settings);
    sol = finish(prog, sf, solver.run(warm));
  }
  sol.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace detail

/// Interior-point solve of a ConicProgram (homogeneous self-dual embedding,
/// Mehrotra predictor-corrector, Nesterov-Todd scaling).
inline ConicSolution solve(const ConicProgram& prog, const IpmSettings& settings = {}) {
  return detail::solve_impl(prog, settings, std::nullopt);
}

inline ConicSolution solve(const ConicProgram& prog, double ipm_tol, int max_iter,
                           double time_limit_s = std::numeric_limits<double>::infinity()) {
  IpmSettings s;
  s.tol = ipm_tol;
  s.max_iter = max_iter;
  s.time_limit_s = time_limit_s;
  return solve(prog, s);
}

/// Re-solve starting near `prior`. Falls back to a cold start when the
/// presolved shapes differ or the warm run does not reach Optimal.
inline ConicSolution warm_start(const ConicProgram& prog, const ConicSolution& prior,
                                const IpmSettings& settings = {}) {
  ConicSolution warm = detail::solve_impl(prog, settings, prior);
  if (warm.status == ConicStatus::kOptimal || warm.status == ConicStatus::kInfeasible) return warm;
  return solve(prog, settings);
}

}  // namespace sparse_svm::conicqp
