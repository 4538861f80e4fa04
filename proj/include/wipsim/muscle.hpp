// Copyright 2026 The wipsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tendon-driven arm layer.
//
// Muscle lengths follow l = l0 + G xi with constant moment arms (G rows are
// dl/dxi), so tensions T act on the joints as tau = -G' T. Commanded
// lengths add the elastic elongation T / k_e. Joint torque references are
// turned into tensions by the quadratic program
//
//   minimize x' W x  subject to  -G' x = tau_ref,  T_min <= x <= T_max,
//
// solved with the Goldfarb-Idnani dual active-set method, which starts from
// the unconstrained minimum and needs no feasible initial point.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wipsim/errors.hpp"

namespace wipsim {

struct MuscleConfig {
  Eigen::MatrixXd G;         // M x J, dl/dxi [m/rad]
  Eigen::VectorXd w_diag;    // M, objective weights
  Eigen::VectorXd t_min;     // M [N]
  Eigen::VectorXd t_max;     // M [N], +inf for no cap
  Eigen::VectorXd l0;        // M rest lengths [m]
  Eigen::VectorXd k_e;       // M elastic constants [N/m]
  Eigen::VectorXd k_j_diag;  // J joint gains [N m/rad]

  Eigen::Index muscles() const { return G.rows(); }
  Eigen::Index joints() const { return G.cols(); }

  void validate(bool require_full_rank = true) const {
    const Eigen::Index m = muscles();
    const Eigen::Index j = joints();
    const auto check_size = [](const Eigen::VectorXd& v, Eigen::Index n, const char* name) {
      if (v.size() != n)
        throw DimensionMismatch(std::string("muscle config: ") + name + " has " +
                                std::to_string(v.size()) + " entries, expected " +
                                std::to_string(n));
    };
    if (m == 0 || j == 0) throw InvalidArgument("muscle config: G must be non-empty");
    check_size(w_diag, m, "w_diag");
    check_size(t_min, m, "t_min");
    check_size(t_max, m, "t_max");
    check_size(l0, m, "l0");
    check_size(k_e, m, "k_e");
    check_size(k_j_diag, j, "k_j_diag");
    if (!G.allFinite()) throw InvalidArgument("muscle config: G must be finite");
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!(w_diag[i] > 0.0) || !std::isfinite(w_diag[i]))
        throw InvalidArgument("muscle config: w_diag entries must be > 0");
      if (!(t_min[i] >= 0.0) || !std::isfinite(t_min[i]))
        throw InvalidArgument("muscle config: t_min entries must be finite and >= 0");
      if (!(t_min[i] < t_max[i]))
        throw InvalidArgument("muscle config: t_min must be below t_max for muscle " +
                              std::to_string(i));
      if (!(k_e[i] > 0.0) || !std::isfinite(k_e[i]))
        throw InvalidArgument("muscle config: k_e entries must be > 0");
      if (!std::isfinite(l0[i])) throw InvalidArgument("muscle config: l0 must be finite");
    }
    for (Eigen::Index i = 0; i < j; ++i)
      if (!(k_j_diag[i] >= 0.0) || !std::isfinite(k_j_diag[i]))
        throw InvalidArgument("muscle config: k_j_diag entries must be >= 0");
    if (require_full_rank) {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
      lu.setThreshold(1e-10);
      if (lu.rank() != j)
        throw InvalidArgument("muscle config: G must have full column rank " +
                              std::to_string(j) + ", got " + std::to_string(lu.rank()));
    }
  }
};

// Six muscles over shoulder and elbow pitch: a flexor/extensor pair per joint
// and a biarticular pair. Moment arms are fixed draws from [0.02, 0.06] m.
inline MuscleConfig default_arm_muscles() {
  MuscleConfig cfg;
  cfg.G.resize(6, 2);
  cfg.G << -0.045, 0.0,
            0.038, 0.0,
            0.0, -0.032,
            0.0, 0.027,
           -0.025, -0.021,
            0.052, 0.024;
  cfg.w_diag = Eigen::VectorXd::Ones(6);
  cfg.t_min = Eigen::VectorXd::Constant(6, 10.0);
  cfg.t_max = Eigen::VectorXd::Constant(6, 1500.0);
  cfg.l0 = (Eigen::VectorXd(6) << 0.30, 0.32, 0.26, 0.24, 0.45, 0.48).finished();
  cfg.k_e = Eigen::VectorXd::Constant(6, 20000.0);
  cfg.k_j_diag = Eigen::VectorXd::Constant(2, 50.0);
  return cfg;
}

struct ArmState {
  Eigen::VectorXd xi;       // joint angles [rad]
  Eigen::VectorXd xi_ref;   // target joint angles [rad]
  Eigen::VectorXd tension;  // current muscle tensions [N]
};

struct ActiveBound {
  Eigen::Index muscle = 0;
  bool upper = false;

  friend bool operator==(const ActiveBound&, const ActiveBound&) = default;
};

struct TensionSolution {
  Eigen::VectorXd t_ref;
  double objective = 0.0;
  std::vector<ActiveBound> active_set;
  double equality_residual = 0.0;
  int iterations = 0;
};

// No tension vector inside the bounds produces the requested torque.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double violation, Eigen::VectorXd best_effort)
      : Error(what + " (minimum violation " + std::to_string(violation) + " N m)"),
        violation_(violation),
        best_effort_(std::move(best_effort)) {}
  // Smallest reachable ||G' x + tau_ref|| over the box.
  double violation() const { return violation_; }
  const Eigen::VectorXd& best_effort() const { return best_effort_; }

 private:
  double violation_;
  Eigen::VectorXd best_effort_;
};

// l_target = l0 + G xi + T / k_e.
inline Eigen::VectorXd target_muscle_lengths(const MuscleConfig& cfg, const Eigen::VectorXd& xi,
                                             const Eigen::VectorXd& tension) {
  if (xi.size() != cfg.joints())
    throw DimensionMismatch("target_muscle_lengths: expected " + std::to_string(cfg.joints()) +
                            " joint angles, got " + std::to_string(xi.size()));
  if (tension.size() != cfg.muscles() || cfg.l0.size() != cfg.muscles() ||
      cfg.k_e.size() != cfg.muscles())
    throw DimensionMismatch("target_muscle_lengths: expected " +
                            std::to_string(cfg.muscles()) + " muscle entries");
  return cfg.l0 + cfg.G * xi + tension.cwiseQuotient(cfg.k_e);
}

// tau_ref = K_j (xi_ref - xi) + tau_g(xi) for a precomputed gravity torque.
inline Eigen::VectorXd reference_torque(const MuscleConfig& cfg, const ArmState& arm,
                                        const Eigen::VectorXd& tau_gravity) {
  const Eigen::Index j = cfg.joints();
  if (arm.xi.size() != j || arm.xi_ref.size() != j || tau_gravity.size() != j ||
      cfg.k_j_diag.size() != j)
    throw DimensionMismatch("reference_torque: expected " + std::to_string(j) + " joints");
  return cfg.k_j_diag.cwiseProduct(arm.xi_ref - arm.xi) + tau_gravity;
}

// Same law with tau_g evaluated by `gravity_model(xi)`.
template <class GravityModel>
  requires(!std::is_base_of_v<Eigen::EigenBase<std::decay_t<GravityModel>>,
                              std::decay_t<GravityModel>> &&
           std::is_invocable_r_v<Eigen::VectorXd, GravityModel, const Eigen::VectorXd&>)
Eigen::VectorXd reference_torque(const MuscleConfig& cfg, const ArmState& arm,
                                 GravityModel&& gravity_model) {
  return reference_torque(cfg, arm, Eigen::VectorXd(gravity_model(arm.xi)));
}

struct QpOptions {
  int max_iterations = 500;
  // Bound tolerance used when reporting the active set [N].
  double active_tolerance = 1e-9;
  int best_effort_iterations = 20000;
};

namespace detail {

// Goldfarb-Idnani solver for min 1/2 x'Hx with H diagonal, equalities
// CE' x + ce0 = 0 and inequalities CI' x + ci0 >= 0. Returns false when the
// inequalities are infeasible; throws when the equalities are dependent.
class DualActiveSet {
 public:
  DualActiveSet(const Eigen::VectorXd& h_diag, const Eigen::MatrixXd& CE,
                const Eigen::VectorXd& ce0, const Eigen::MatrixXd& CI,
                const Eigen::VectorXd& ci0)
      : n_(h_diag.size()), me_(CE.cols()), mi_(CI.cols()), CE_(CE), ce0_(ce0), CI_(CI),
        ci0_(ci0) {
    J_ = h_diag.cwiseSqrt().cwiseInverse().asDiagonal();
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    x_ = Eigen::VectorXd::Zero(n_);
    c1_ = h_diag.sum();
    c2_ = J_.trace();
  }

  bool solve(int max_iterations) {
    const Eigen::Index mtot = me_ + mi_;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(mtot + 1);
    Eigen::VectorXd u_old = u;
    std::vector<Eigen::Index> A(static_cast<std::size_t>(mtot + 1), 0), A_old = A;
    std::vector<Eigen::Index> iai(static_cast<std::size_t>(mi_));
    std::vector<bool> allowed(static_cast<std::size_t>(mi_), true);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(mi_);
    Eigen::VectorXd d(n_), z(n_), r(mtot + 1), np(n_);
    Eigen::VectorXd x_old = x_;
    double r_norm = 1.0;
    iq_ = 0;

    for (Eigen::Index i = 0; i < me_; ++i) {
      np = CE_.col(i);
      d = J_.transpose() * np;
      update_z(z, d);
      update_r(r, d);
      double t2 = 0.0;
      if (std::abs(z.dot(z)) > eps()) t2 = (-np.dot(x_) - ce0_[i]) / z.dot(np);
      x_ += t2 * z;
      u[iq_] = t2;
      u.head(iq_) -= t2 * r.head(iq_);
      A[static_cast<std::size_t>(i)] = -i - 1;
      if (!add_constraint(d, r_norm))
        throw InvalidArgument("allocate_tensions: torque equalities are linearly dependent");
    }
    for (Eigen::Index i = 0; i < mi_; ++i) iai[static_cast<std::size_t>(i)] = i;

    Eigen::Index ip = 0;
    for (iterations_ = 0; iterations_ < max_iterations;) {
      // Step 1: choose a violated constraint.
      ++iterations_;
      for (Eigen::Index i = me_; i < iq_; ++i)
        iai[static_cast<std::size_t>(A[static_cast<std::size_t>(i)])] = -1;
      double psi = 0.0;
      for (Eigen::Index i = 0; i < mi_; ++i) {
        allowed[static_cast<std::size_t>(i)] = true;
        s[i] = CI_.col(i).dot(x_) + ci0_[i];
        psi += std::min(0.0, s[i]);
      }
      if (std::abs(psi) <= static_cast<double>(mi_) * eps() * c1_ * c2_ * 100.0) return true;
      u_old.head(iq_) = u.head(iq_);
      std::copy(A.begin(), A.begin() + iq_, A_old.begin());
      x_old = x_;

    choose:
      double ss = 0.0;
      for (Eigen::Index i = 0; i < mi_; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (s[i] < ss && iai[k] != -1 && allowed[k]) {
          ss = s[i];
          ip = i;
        }
      }
      if (ss >= 0.0) return true;
      np = CI_.col(ip);
      u[iq_] = 0.0;
      A[static_cast<std::size_t>(iq_)] = ip;

    step:
      // Step 2: primal and dual step directions.
      d = J_.transpose() * np;
      update_z(z, d);
      update_r(r, d);
      // Step 2a: dual step length (largest step keeping multipliers >= 0).
      Eigen::Index l = 0;
      double t1 = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = me_; k < iq_; ++k) {
        if (r[k] > 0.0 && u[k] / r[k] < t1) {
          t1 = u[k] / r[k];
          l = A[static_cast<std::size_t>(k)];
        }
      }
      // Step 2b: primal step length.
      double t2 = std::numeric_limits<double>::infinity();
      if (std::abs(z.dot(z)) > eps()) t2 = -s[ip] / z.dot(np);
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return false;

      if (!std::isfinite(t2)) {
        // Dual-only step: drop the blocking constraint and retry.
        u.head(iq_) -= t * r.head(iq_);
        u[iq_] += t;
        iai[static_cast<std::size_t>(l)] = l;
        delete_constraint(A, u, l);
        goto step;
      }

      x_ += t * z;
      u.head(iq_) -= t * r.head(iq_);
      u[iq_] += t;
      if (t == t2) {
        // Full step: the chosen constraint joins the active set.
        if (!add_constraint(d, r_norm)) {
          allowed[static_cast<std::size_t>(ip)] = false;
          delete_constraint(A, u, ip);
          for (Eigen::Index i = 0; i < mi_; ++i) iai[static_cast<std::size_t>(i)] = i;
          for (Eigen::Index i = 0; i < iq_; ++i) {
            A[static_cast<std::size_t>(i)] = A_old[static_cast<std::size_t>(i)];
            if (i >= me_) iai[static_cast<std::size_t>(A[static_cast<std::size_t>(i)])] = -1;
            u[i] = u_old[i];
          }
          x_ = x_old;
          goto choose;
        }
        iai[static_cast<std::size_t>(ip)] = -1;
        continue;
      }
      // Partial step: drop the blocking constraint and keep going.
      iai[static_cast<std::size_t>(l)] = l;
      delete_constraint(A, u, l);
      s[ip] = CI_.col(ip).dot(x_) + ci0_[ip];
      goto step;
    }
    throw ConvergenceError("allocate_tensions: active-set iteration limit reached", {});
  }

  const Eigen::VectorXd& x() const { return x_; }
  int iterations() const { return iterations_; }

 private:
  static double eps() { return std::numeric_limits<double>::epsilon(); }

  void update_z(Eigen::VectorXd& z, const Eigen::VectorXd& d) const {
    z = J_.rightCols(n_ - iq_) * d.tail(n_ - iq_);
  }

  void update_r(Eigen::VectorXd& r, const Eigen::VectorXd& d) const {
    r.head(iq_) = R_.topLeftCorner(iq_, iq_).triangularView<Eigen::Upper>().solve(d.head(iq_));
  }

  bool add_constraint(Eigen::VectorXd& d, double& r_norm) {
    for (Eigen::Index j = n_ - 1; j >= iq_ + 1; --j) {
      double cc = d[j - 1];
      double ss = d[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d[j - 1] = -h;
      } else {
        d[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double a = J_(k, j - 1);
        const double b = J_(k, j);
        J_(k, j - 1) = a * cc + b * ss;
        J_(k, j) = xny * (a + J_(k, j - 1)) - b;
      }
    }
    ++iq_;
    R_.col(iq_ - 1).head(iq_) = d.head(iq_);
    if (std::abs(d[iq_ - 1]) <= eps() * r_norm) return false;
    r_norm = std::max(r_norm, std::abs(d[iq_ - 1]));
    return true;
  }

  void delete_constraint(std::vector<Eigen::Index>& A, Eigen::VectorXd& u, Eigen::Index l) {
    Eigen::Index qq = -1;
    for (Eigen::Index i = me_; i < iq_; ++i) {
      if (A[static_cast<std::size_t>(i)] == l) {
        qq = i;
        break;
      }
    }
    if (qq < 0) return;
    for (Eigen::Index i = qq; i < iq_ - 1; ++i) {
      A[static_cast<std::size_t>(i)] = A[static_cast<std::size_t>(i + 1)];
      u[i] = u[i + 1];
      R_.col(i) = R_.col(i + 1);
    }
    A[static_cast<std::size_t>(iq_ - 1)] = A[static_cast<std::size_t>(iq_)];
    u[iq_ - 1] = u[iq_];
    A[static_cast<std::size_t>(iq_)] = 0;
    u[iq_] = 0.0;
    R_.col(iq_ - 1).head(iq_).setZero();
    --iq_;
    if (iq_ == 0) return;
    for (Eigen::Index j = qq; j < iq_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = j + 1; k < iq_; ++k) {
        const double a = R_(j, k);
        const double b = R_(j + 1, k);
        R_(j, k) = a * cc + b * ss;
        R_(j + 1, k) = xny * (a + R_(j, k)) - b;
      }
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double a = J_(k, j);
        const double b = J_(k, j + 1);
        J_(k, j) = a * cc + b * ss;
        J_(k, j + 1) = xny * (J_(k, j) + a) - b;
      }
    }
  }

  Eigen::Index n_, me_, mi_;
  const Eigen::MatrixXd& CE_;
  const Eigen::VectorXd& ce0_;
  const Eigen::MatrixXd& CI_;
  const Eigen::VectorXd& ci0_;
  Eigen::MatrixXd J_, R_;
  Eigen::VectorXd x_;
  Eigen::Index iq_ = 0;
  double c1_ = 0.0, c2_ = 0.0;
  int iterations_ = 0;
};

// Accelerated projected gradient for min ||G' x + tau||^2 over the box.
inline Eigen::VectorXd closest_feasible(const MuscleConfig& cfg, const Eigen::VectorXd& tau,
                                        int iterations) {
  const Eigen::MatrixXd Gt = cfg.G.transpose();
  const double lipschitz = 2.0 * std::max(1e-300, (Gt * cfg.G).norm());
  const auto project = [&](Eigen::VectorXd v) {
    return v.cwiseMax(cfg.t_min).cwiseMin(cfg.t_max).eval();
  };
  Eigen::VectorXd x = project(cfg.t_min);
  Eigen::VectorXd y = x;
  double tk = 1.0;
  for (int k = 0; k < iterations; ++k) {
    const Eigen::VectorXd grad = 2.0 * cfg.G * (Gt * y + tau);
    const Eigen::VectorXd next = project(y - grad / lipschitz);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    y = next + ((tk - 1.0) / tn) * (next - x);
    if ((next - x).lpNorm<Eigen::Infinity>() < 1e-15) {
      x = next;
      break;
    }
    x = next;
    tk = tn;
  }
  return x;
}

// Re-solves the equality-constrained problem with the active bounds fixed.
inline Eigen::VectorXd polish(const MuscleConfig& cfg, const Eigen::VectorXd& tau,
                              const Eigen::VectorXd& x, const std::vector<ActiveBound>& active) {
  const Eigen::Index m = cfg.muscles();
  std::vector<bool> fixed(static_cast<std::size_t>(m), false);
  Eigen::VectorXd out = x;
  for (const auto& a : active) {
    fixed[static_cast<std::size_t>(a.muscle)] = true;
    out[a.muscle] = a.upper ? cfg.t_max[a.muscle] : cfg.t_min[a.muscle];
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < m; ++i)
    if (!fixed[static_cast<std::size_t>(i)]) free.push_back(i);
  if (free.empty()) return out;
  // Free part: min sum w x^2 s.t. G_F' x_F = rhs, so x_F = W_F^-1 G_F lambda.
  Eigen::VectorXd rhs = -tau;
  for (Eigen::Index i = 0; i < m; ++i)
    if (fixed[static_cast<std::size_t>(i)]) rhs -= cfg.G.row(i).transpose() * out[i];
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd GF(nf, cfg.joints());
  Eigen::VectorXd winv(nf);
  for (Eigen::Index k = 0; k < nf; ++k) {
    GF.row(k) = cfg.G.row(free[static_cast<std::size_t>(k)]);
    winv[k] = 1.0 / cfg.w_diag[free[static_cast<std::size_t>(k)]];
  }
  const Eigen::MatrixXd S = GF.transpose() * winv.asDiagonal() * GF;
  const Eigen::VectorXd lambda = S.completeOrthogonalDecomposition().solve(rhs);
  const Eigen::VectorXd xf = winv.asDiagonal() * (GF * lambda);
  for (Eigen::Index k = 0; k < nf; ++k) out[free[static_cast<std::size_t>(k)]] = xf[k];
  return out;
}

}  // namespace detail

inline TensionSolution allocate_tensions(const MuscleConfig& cfg, const Eigen::VectorXd& tau_ref,
                                         const QpOptions& opt = {}) {
  cfg.validate(false);
  const Eigen::Index m = cfg.muscles();
  const Eigen::Index j = cfg.joints();
  if (tau_ref.size() != j)
    throw DimensionMismatch("allocate_tensions: expected " + std::to_string(j) +
                            " joint torques, got " + std::to_string(tau_ref.size()));
  if (!tau_ref.allFinite()) throw InvalidArgument("allocate_tensions: non-finite torque");

  // -G' x = tau  <=>  G' x + tau = 0; bounds as x - t_min >= 0, t_max - x >= 0.
  Eigen::Index n_upper = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::isfinite(cfg.t_max[i])) ++n_upper;
  Eigen::MatrixXd CI = Eigen::MatrixXd::Zero(m, m + n_upper);
  Eigen::VectorXd ci0(m + n_upper);
  for (Eigen::Index i = 0, k = m; i < m; ++i) {
    CI(i, i) = 1.0;
    ci0[i] = -cfg.t_min[i];
    if (std::isfinite(cfg.t_max[i])) {
      CI(i, k) = -1.0;
      ci0[k] = cfg.t_max[i];
      ++k;
    }
  }
  const Eigen::MatrixXd CE = cfg.G;
  const Eigen::VectorXd ce0 = tau_ref;
  const Eigen::VectorXd h = 2.0 * cfg.w_diag;

  detail::DualActiveSet qp(h, CE, ce0, CI, ci0);
  if (!qp.solve(opt.max_iterations)) {
    const Eigen::VectorXd best = detail::closest_feasible(cfg, tau_ref, opt.best_effort_iterations);
    const double violation = (cfg.G.transpose() * best + tau_ref).norm();
    throw InfeasibleError("allocate_tensions: torque not reachable within tension bounds",
                          violation, best);
  }

  TensionSolution sol;
  sol.iterations = qp.iterations();
  Eigen::VectorXd x = qp.x();
  const auto collect_active = [&](const Eigen::VectorXd& v) {
    std::vector<ActiveBound> active;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double tol = opt.active_tolerance * (1.0 + std::abs(cfg.t_min[i]));
      if (v[i] <= cfg.t_min[i] + tol)
        active.push_back({i, false});
      else if (std::isfinite(cfg.t_max[i]) &&
               v[i] >= cfg.t_max[i] - opt.active_tolerance * (1.0 + std::abs(cfg.t_max[i])))
        active.push_back({i, true});
    }
    return active;
  };
  const auto residual = [&](const Eigen::VectorXd& v) {
    return (cfg.G.transpose() * v + tau_ref).norm();
  };
  sol.active_set = collect_active(x);
  const Eigen::VectorXd polished = detail::polish(cfg, tau_ref, x, sol.active_set);
  const bool inside = (polished.array() >= cfg.t_min.array() - opt.active_tolerance).all() &&
                      (polished.array() <= cfg.t_max.array() + opt.active_tolerance).all();
  if (inside && residual(polished) <= residual(x)) x = polished;
  x = x.cwiseMax(cfg.t_min).cwiseMin(cfg.t_max);
  sol.t_ref = x;
  sol.active_set = collect_active(x);
  sol.objective = x.dot(cfg.w_diag.cwiseProduct(x));
  sol.equality_residual = residual(x);
  return sol;
}

}  // namespace wipsim
