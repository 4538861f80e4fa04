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

// Continuous algebraic Riccati equation
//
//   A'P + PA - P B R^-1 B' P + Q = 0
//
// solved for its stabilizing solution. The stable invariant subspace of the
// Hamiltonian is extracted with the scaled matrix sign function iteration
// and the result is polished with Newton (Kleinman) correction steps until
// the residual meets the requested bound. Intended for the small dense
// systems of state feedback design; the Lyapunov solves are Kronecker based.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wipsim/errors.hpp"
#include "wipsim/plant.hpp"

namespace wipsim {

struct CareOptions {
  int max_sign_iterations = 100;
  double sign_tolerance = 1e-13;
  int max_newton_iterations = 20;
  // Accept when ||residual||_F <= residual_tolerance * (1 + ||P||_F).
  double residual_tolerance = 1e-8;
  double stabilizability_tolerance = 1e-9;
};

struct CareSolution {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  Eigen::VectorXcd closed_loop_eigs;
  double residual_norm = 0.0;
  std::vector<double> residual_history;
};

inline Eigen::MatrixXd care_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                     const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtP = B.transpose() * P;
  return A.transpose() * P + P * A - BtP.transpose() * R.llt().solve(BtP) + Q;
}

// PBH test: rank [A - lambda I, B] = n for every eigenvalue with Re >= 0.
inline bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            double tol = 1e-9) {
  const Eigen::Index n = A.rows();
  if (n == 0) return true;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const double scale = std::max(1.0, std::max(A.norm(), B.norm()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()[i];
    if (lambda.real() < -tol * scale) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = A.cast<std::complex<double>>() -
                      lambda * Eigen::MatrixXcd::Identity(n, n);
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    if (svd.singularValues()[n - 1] <= tol * scale) return false;
  }
  return true;
}

namespace detail {

// Solves Ac' X + X Ac = C for X.
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& C) {
  const Eigen::Index n = Ac.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = Ac.transpose();
  Eigen::MatrixXd kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      kron.block(i * n, j * n, n, n) = I(i, j) * At + At(i, j) * I;
  const Eigen::VectorXd x =
      kron.fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(C.data(), n * n));
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

inline Eigen::MatrixXd hamiltonian_sign(const Eigen::MatrixXd& H, const CareOptions& opt) {
  const Eigen::Index N = H.rows();
  Eigen::MatrixXd Z = H;
  std::vector<double> history;
  bool scale = true;
  for (int k = 0; k < opt.max_sign_iterations; ++k) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Z);
    const Eigen::MatrixXd Zinv = lu.inverse();
    if (!Zinv.allFinite() || lu.rcond() < 1e-14)
      throw NotStabilizableError(
          "solve_care: Hamiltonian has eigenvalues on the imaginary axis; "
          "no stabilizing solution");
    double c = 1.0;
    if (scale) {
      const double logdet = lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
      c = std::exp(-logdet / static_cast<double>(N));
    }
    const Eigen::MatrixXd next = 0.5 * (c * Z + Zinv / c);
    const double change = (next - Z).lpNorm<1>() / std::max(1.0, next.lpNorm<1>());
    history.push_back(change);
    Z = next;
    if (change < 1e-2) scale = false;
    if (change <= opt.sign_tolerance) return Z;
    // Quadratic convergence has stalled at roundoff level.
    if (!scale && history.size() > 2 && change < 1e-10 &&
        change >= history[history.size() - 2])
      return Z;
  }
  throw ConvergenceError("solve_care: sign iteration did not converge", history);
}

}  // namespace detail

inline CareSolution solve_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                               const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                               const CareOptions& opt = {}) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
      R.cols() != m)
    throw DimensionMismatch("solve_care: inconsistent matrix dimensions");
  if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite())
    throw InvalidArgument("solve_care: non-finite input");
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm()))
    throw InvalidArgument("solve_care: Q must be symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(R).info() != Eigen::Success)
    throw InvalidArgument("solve_care: R must be positive definite");
  if (!is_stabilizable(A, B, opt.stabilizability_tolerance))
    throw NotStabilizableError("solve_care: (A, B) is not stabilizable");

  const Eigen::MatrixXd S = B * R.llt().solve(B.transpose());
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -S, -Q, -A.transpose();
  const Eigen::MatrixXd W = detail::hamiltonian_sign(H, opt);

  // The stable subspace is spanned by [I; P], and (W + I) annihilates it.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << W.topRightCorner(n, n), W.bottomRightCorner(n, n) + I;
  rhs << -(W.topLeftCorner(n, n) + I), -W.bottomLeftCorner(n, n);
  Eigen::MatrixXd P = lhs.colPivHouseholderQr().solve(rhs);
  P = 0.5 * (P + P.transpose()).eval();

  CareSolution sol;
  const auto bound = [&](const Eigen::MatrixXd& X) {
    return opt.residual_tolerance * (1.0 + X.norm());
  };
  double res = care_residual(A, B, Q, R, P).norm();
  sol.residual_history.push_back(res);
  for (int k = 0; k < opt.max_newton_iterations; ++k) {
    if (!std::isfinite(res)) break;
    if (res <= 1e-3 * bound(P)) break;
    const Eigen::MatrixXd K = R.llt().solve(B.transpose() * P);
    const Eigen::MatrixXd Ac = A - B * K;
    Eigen::MatrixXd delta = detail::solve_lyapunov(Ac, -care_residual(A, B, Q, R, P));
    delta = 0.5 * (delta + delta.transpose()).eval();
    const Eigen::MatrixXd candidate = P + delta;
    const double cand_res = care_residual(A, B, Q, R, candidate).norm();
    if (!(cand_res < res)) break;
    P = candidate;
    res = cand_res;
    sol.residual_history.push_back(res);
  }
  if (!(res <= bound(P)))
    throw ConvergenceError("solve_care: residual " + std::to_string(res) +
                               " exceeds tolerance",
                           sol.residual_history);

  sol.P = P;
  sol.K = R.llt().solve(B.transpose() * P);
  sol.residual_norm = res;
  sol.closed_loop_eigs = Eigen::EigenSolver<Eigen::MatrixXd>(A - B * sol.K, false).eigenvalues();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(sol.closed_loop_eigs[i].real() < 0.0))
      throw ConvergenceError("solve_care: solution is not stabilizing", sol.residual_history);
  return sol;
}

struct LqrWeights {
  std::array<double, 4> q_diag{500.0, 1.0, 500.0, 0.2};
  double r = 1e-4;

  void validate() const {
    bool any = false;
    for (double q : q_diag) {
      if (!(q >= 0.0) || !std::isfinite(q))
        throw InvalidArgument("lqr weights: q_diag entries must be finite and >= 0");
      any = any || q > 0.0;
    }
    if (!any) throw InvalidArgument("lqr weights: q_diag needs a positive entry");
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("lqr weights: r must be > 0");
  }
};

struct LqrGain {
  Eigen::RowVector4d K = Eigen::RowVector4d::Zero();
  Eigen::Matrix4d P = Eigen::Matrix4d::Zero();
  std::array<std::complex<double>, 4> closed_loop_eigs{};
  double residual_norm = 0.0;
};

inline LqrGain solve_care(const LinearModel& model, const LqrWeights& w,
                          const CareOptions& opt = {}) {
  w.validate();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) Q(i, i) = w.q_diag[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd R = Eigen::MatrixXd::Constant(1, 1, w.r);
  const CareSolution sol = solve_care(model.A, model.B, Q, R, opt);
  LqrGain gain;
  gain.K = sol.K.row(0);
  gain.P = sol.P;
  for (int i = 0; i < 4; ++i) gain.closed_loop_eigs[static_cast<std::size_t>(i)] = sol.closed_loop_eigs[i];
  gain.residual_norm = sol.residual_norm;
  return gain;
}

// Total wheel torque u = -K [theta - theta_ref, phi - phi_ref, theta_dot, phi_dot].
inline double control_torque(const LqrGain& gain, const PendulumState& s, double theta_ref,
                             double phi_ref) {
  const Eigen::Vector4d err{s.theta - theta_ref, s.phi - phi_ref, s.theta_dot, s.phi_dot};
  return -gain.K.dot(err);
}

}  // namespace wipsim
