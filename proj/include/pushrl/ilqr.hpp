#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pushrl {

using DynamicsFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;

// Finite-horizon trajectory optimization problem with quadratic tracking
// cost around (x_ref, u_ref):
//   l_t = 1/2 (x - x_ref[t])' Q (x - x_ref[t]) + 1/2 (u - u_ref[t])' R (u - u_ref[t])
//   l_T = 1/2 (x - x_ref[T])' Qf (x - x_ref[T])
// u_ref doubles as the initial control sequence.
struct IlqrProblem {
  DynamicsFn dynamics;
  Eigen::MatrixXd Q, R, Qf;
  std::vector<Eigen::VectorXd> x_ref;  // T + 1 entries
  std::vector<Eigen::VectorXd> u_ref;  // T entries
  Eigen::VectorXd x0;
  double fd_step = 1e-5;
  int max_iterations = 200;
  double tol = 1e-8;
  double reg_max = 1e10;
};

struct IlqrSolution {
  std::vector<Eigen::VectorXd> xs;  // nominal states, T + 1
  std::vector<Eigen::VectorXd> us;  // nominal controls, T
  std::vector<Eigen::MatrixXd> K;   // time-varying feedback
  std::vector<Eigen::VectorXd> k;   // feedforward
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ok = false;
  std::string diagnostics;
};

namespace detail {

inline void fd_jacobians(const DynamicsFn& f, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         double h, Eigen::MatrixXd& A, Eigen::MatrixXd& B) {
  const int n = int(x.size()), m = int(u.size());
  A.resize(n, n);
  B.resize(n, m);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xq = x;
    xp[i] += h;
    xq[i] -= h;
    A.col(i) = (f(xp, u) - f(xq, u)) / (2.0 * h);
  }
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd up = u, uq = u;
    up[i] += h;
    uq[i] -= h;
    B.col(i) = (f(x, up) - f(x, uq)) / (2.0 * h);
  }
}

inline bool is_psd_symmetric(const Eigen::MatrixXd& M, double tol = 1e-9) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace detail

inline IlqrSolution ilqr_solve(const IlqrProblem& prob) {
  const int T = int(prob.u_ref.size());
  if (T < 1) throw std::invalid_argument("ilqr: horizon must be >= 1");
  if (int(prob.x_ref.size()) != T + 1)
    throw std::invalid_argument("ilqr: x_ref must have horizon + 1 entries");
  if (!detail::is_psd_symmetric(prob.Q) || !detail::is_psd_symmetric(prob.Qf))
    throw std::invalid_argument("ilqr: Q and Qf must be symmetric positive semidefinite");
  {
    Eigen::LLT<Eigen::MatrixXd> llt(prob.R);
    if ((prob.R - prob.R.transpose()).cwiseAbs().maxCoeff() > 1e-9 ||
        llt.info() != Eigen::Success)
      throw std::invalid_argument("ilqr: R must be symmetric positive definite");
  }

  const int n = int(prob.x0.size());
  const int m = int(prob.u_ref.front().size());

  auto rollout = [&](const std::vector<Eigen::VectorXd>& us) {
    std::vector<Eigen::VectorXd> xs{prob.x0};
    for (int t = 0; t < T; ++t) xs.push_back(prob.dynamics(xs.back(), us[t]));
    return xs;
  };
  auto total_cost = [&](const std::vector<Eigen::VectorXd>& xs,
                        const std::vector<Eigen::VectorXd>& us) {
    double c = 0.0;
    for (int t = 0; t < T; ++t) {
      const Eigen::VectorXd dx = xs[t] - prob.x_ref[t];
      const Eigen::VectorXd du = us[t] - prob.u_ref[t];
      c += 0.5 * dx.dot(prob.Q * dx) + 0.5 * du.dot(prob.R * du);
    }
    const Eigen::VectorXd dxT = xs[T] - prob.x_ref[T];
    return c + 0.5 * dxT.dot(prob.Qf * dxT);
  };

  IlqrSolution sol;
  sol.us = prob.u_ref;
  sol.xs = rollout(sol.us);
  sol.cost = total_cost(sol.xs, sol.us);
  sol.K.assign(T, Eigen::MatrixXd::Zero(m, n));
  sol.k.assign(T, Eigen::VectorXd::Zero(m));

  std::vector<Eigen::MatrixXd> A(T), B(T);
  double reg = 0.0;

  // Backward Riccati sweep; returns false when Quu stays non-PD at this reg.
  auto backward = [&](double mu) {
    Eigen::VectorXd vx = prob.Qf * (sol.xs[T] - prob.x_ref[T]);
    Eigen::MatrixXd vxx = prob.Qf;
    for (int t = T - 1; t >= 0; --t) {
      const Eigen::VectorXd dx = sol.xs[t] - prob.x_ref[t];
      const Eigen::VectorXd du = sol.us[t] - prob.u_ref[t];
      const Eigen::VectorXd qx = prob.Q * dx + A[t].transpose() * vx;
      const Eigen::VectorXd qu = prob.R * du + B[t].transpose() * vx;
      const Eigen::MatrixXd qxx = prob.Q + A[t].transpose() * vxx * A[t];
      Eigen::MatrixXd quu = prob.R + B[t].transpose() * vxx * B[t];
      const Eigen::MatrixXd qux = B[t].transpose() * vxx * A[t];
      quu += mu * Eigen::MatrixXd::Identity(m, m);
      Eigen::LLT<Eigen::MatrixXd> llt(quu);
      if (llt.info() != Eigen::Success) return false;
      sol.k[t] = -llt.solve(qu);
      sol.K[t] = -llt.solve(qux);
      vx = qx + sol.K[t].transpose() * quu * sol.k[t] + sol.K[t].transpose() * qu +
           qux.transpose() * sol.k[t];
      vxx = qxx + sol.K[t].transpose() * quu * sol.K[t] + sol.K[t].transpose() * qux +
            qux.transpose() * sol.K[t];
      vxx = 0.5 * (vxx + vxx.transpose());
    }
    return true;
  };

  for (sol.iterations = 1; sol.iterations <= prob.max_iterations; ++sol.iterations) {
    for (int t = 0; t < T; ++t)
      detail::fd_jacobians(prob.dynamics, sol.xs[t], sol.us[t], prob.fd_step, A[t], B[t]);

    while (!backward(reg)) {
      reg = reg == 0.0 ? 1e-6 : reg * 10.0;
      if (reg > prob.reg_max) {
        sol.ok = false;
        sol.diagnostics = "control Hessian not positive definite at maximum regularization";
        return sol;
      }
    }

    // Forward pass with backtracking line search.
    bool accepted = false;
    for (double alpha = 1.0; alpha >= 1e-3; alpha *= 0.5) {
      std::vector<Eigen::VectorXd> xs_new{prob.x0};
      std::vector<Eigen::VectorXd> us_new(T);
      for (int t = 0; t < T; ++t) {
        us_new[t] = sol.us[t] + alpha * sol.k[t] + sol.K[t] * (xs_new[t] - sol.xs[t]);
        xs_new.push_back(prob.dynamics(xs_new[t], us_new[t]));
      }
      const double new_cost = total_cost(xs_new, us_new);
      if (new_cost < sol.cost) {
        const double improvement = sol.cost - new_cost;
        sol.xs = std::move(xs_new);
        sol.us = std::move(us_new);
        sol.cost = new_cost;
        reg = std::max(0.0, reg * 0.1);
        accepted = true;
        if (improvement < prob.tol) sol.converged = true;
        break;
      }
    }
    if (!accepted) {
      reg = reg == 0.0 ? 1e-6 : reg * 10.0;
      if (reg > prob.reg_max) {
        sol.converged = true;  // no descent direction improves; accept current
        break;
      }
      continue;
    }
    if (sol.converged) break;
  }

  // Final backward pass so the returned gains match the returned nominal.
  for (int t = 0; t < T; ++t)
    detail::fd_jacobians(prob.dynamics, sol.xs[t], sol.us[t], prob.fd_step, A[t], B[t]);
  double mu = reg;
  while (!backward(mu)) {
    mu = mu == 0.0 ? 1e-6 : mu * 10.0;
    if (mu > prob.reg_max) {
      sol.ok = false;
      sol.diagnostics = "control Hessian not positive definite at maximum regularization";
      return sol;
    }
  }
  sol.ok = true;
  return sol;
}

}  // namespace pushrl
