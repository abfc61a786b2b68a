#pragma once

#include <optional>

#include "pushrl/cartpole.hpp"
#include "pushrl/env.hpp"
#include "pushrl/ilqr.hpp"
#include "pushrl/planner.hpp"

namespace pushrl {

enum class ControllerKind { open_loop, velocity_feedback, ilqr };

inline std::string controller_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::open_loop: return "open_loop";
    case ControllerKind::velocity_feedback: return "velocity_feedback";
    case ControllerKind::ilqr: return "ilqr";
  }
  return "?";
}

// Planner segments span several control steps; tracking wants a reference at
// every 0.1 s tick, so the plan is replayed under its own model and recorded
// densely.
struct DenseReference {
  std::vector<WorldState> states;  // length N + 1
  std::vector<Twist2> controls;    // length N
};

inline DenseReference densify_reference(const Scene& scene, const PlannedTrajectory& traj,
                                        const PhysicsParams& params, double dt = 0.1) {
  DenseReference ref;
  if (traj.states.empty()) return ref;
  WorldState s = lift_to_world(traj.states.front());
  ref.states.push_back(s);
  for (size_t i = 0; i < traj.controls.size(); ++i) {
    const int steps = std::max(1, int(std::round(traj.durations[i] / dt)));
    for (int k = 0; k < steps; ++k) {
      const auto r = step_model(traj.model, scene, s, traj.controls[i], dt, params);
      if (!r.ok()) throw std::runtime_error("densify: plan does not replay under its model");
      s = r.state;
      ref.states.push_back(s);
      ref.controls.push_back(traj.controls[i]);
    }
  }
  return ref;
}

// Packed state for trajectory optimization over the dynamic model:
// robot pose, object poses, object twists.
inline Eigen::VectorXd pack_state(const WorldState& s) {
  const int m = int(s.object_poses.size());
  Eigen::VectorXd x(3 + 6 * m);
  x[0] = s.robot_pose.x;
  x[1] = s.robot_pose.y;
  x[2] = s.robot_pose.theta;
  for (int i = 0; i < m; ++i) {
    x[3 + 3 * i + 0] = s.object_poses[i].x;
    x[3 + 3 * i + 1] = s.object_poses[i].y;
    x[3 + 3 * i + 2] = s.object_poses[i].theta;
    x[3 + 3 * m + 3 * i + 0] = s.object_twists[i].vx;
    x[3 + 3 * m + 3 * i + 1] = s.object_twists[i].vy;
    x[3 + 3 * m + 3 * i + 2] = s.object_twists[i].omega;
  }
  return x;
}

inline WorldState unpack_state(const Eigen::VectorXd& x, int m) {
  WorldState s;
  s.robot_pose = make_pose(x[0], x[1], x[2]);
  for (int i = 0; i < m; ++i) {
    s.object_poses.push_back(make_pose(x[3 + 3 * i], x[4 + 3 * i], x[5 + 3 * i]));
    s.object_twists.push_back(
        {x[3 + 3 * m + 3 * i], x[4 + 3 * m + 3 * i], x[5 + 3 * m + 3 * i]});
  }
  return s;
}

struct TrackingCostWeights {
  double robot_pos = 1.0;
  double robot_ang = 0.1;
  double target_pos = 10.0;
  double other_pos = 0.1;
  double object_ang = 0.1;
  double twist = 0.01;
  double control = 0.1;
  double terminal_scale = 100.0;
};

// Time-varying tracking controller around a planned trajectory.
struct TrackingController {
  ControllerKind kind = ControllerKind::open_loop;
  DenseReference ref;
  double velocity_gain = 1.0;  // proportional gain for velocity_feedback [1/s]
  // iLQR terms (kind == ilqr only)
  std::vector<Eigen::MatrixXd> K;
  std::vector<Eigen::VectorXd> k;
  std::vector<Eigen::VectorXd> x_nom;
  std::vector<Eigen::VectorXd> u_nom;

  int horizon() const { return int(ref.controls.size()); }

  Twist2 control(int t, const WorldState& current) const {
    t = std::min(t, horizon() - 1);
    const Twist2& u_ff = ref.controls[t];
    switch (kind) {
      case ControllerKind::open_loop:
        return u_ff;
      case ControllerKind::velocity_feedback: {
        const SE2Pose& want = ref.states[t].robot_pose;
        const SE2Pose& have = current.robot_pose;
        return {u_ff.vx + velocity_gain * (want.x - have.x),
                u_ff.vy + velocity_gain * (want.y - have.y),
                u_ff.omega + velocity_gain * normalize_angle(want.theta - have.theta)};
      }
      case ControllerKind::ilqr: {
        const Eigen::VectorXd dx = pack_state(current) - x_nom[t];
        const Eigen::VectorXd u = u_nom[t] + k[t] + K[t] * dx;
        return {u[0], u[1], u[2]};
      }
    }
    return u_ff;
  }
};

inline TrackingController make_open_loop(DenseReference ref) {
  TrackingController c;
  c.kind = ControllerKind::open_loop;
  c.ref = std::move(ref);
  return c;
}

inline TrackingController make_velocity_feedback(DenseReference ref, double gain = 1.0) {
  TrackingController c;
  c.kind = ControllerKind::velocity_feedback;
  c.ref = std::move(ref);
  c.velocity_gain = gain;
  return c;
}

// Solves the tracking problem around the dense reference under the nominal
// dynamic model. Returns nullopt (plus diagnostics) when the backward pass
// cannot be stabilized.
inline std::optional<TrackingController> make_ilqr_tracking(
    const Scene& scene, DenseReference ref, const PhysicsParams& params,
    const TrackingCostWeights& weights = {}, double control_dt = 0.1,
    std::string* diagnostics = nullptr, int max_iterations = 60, double fd_step = 1e-3,
    const Twist2& action_limit = {0.25, 0.25, 2.5}) {
  const int m = scene.num_objects();
  const int n = 3 + 6 * m;

  IlqrProblem prob;
  // The finite-difference step doubles as contact smoothing: much below 1 mm
  // the linearization cannot see contact making/breaking and the backward
  // pass returns useless gains.
  prob.fd_step = fd_step;
  // Velocity limits live inside the optimized dynamics so the nominal the
  // solver converges to is exactly executable.
  prob.dynamics = [&scene, &params, control_dt, m, action_limit](const Eigen::VectorXd& x,
                                                                 const Eigen::VectorXd& u) {
    const Twist2 cmd{std::clamp(u[0], -action_limit.vx, action_limit.vx),
                     std::clamp(u[1], -action_limit.vy, action_limit.vy),
                     std::clamp(u[2], -action_limit.omega, action_limit.omega)};
    const auto r = step_dynamic(scene, unpack_state(x, m), cmd, control_dt, params);
    return pack_state(r.state);
  };
  Eigen::VectorXd qdiag = Eigen::VectorXd::Constant(n, weights.twist);
  qdiag[0] = qdiag[1] = weights.robot_pos;
  qdiag[2] = weights.robot_ang;
  for (int i = 0; i < m; ++i) {
    const double pos_w = i == scene.target_index ? weights.target_pos : weights.other_pos;
    qdiag[3 + 3 * i + 0] = pos_w;
    qdiag[3 + 3 * i + 1] = pos_w;
    qdiag[3 + 3 * i + 2] = weights.object_ang;
  }
  prob.Q = qdiag.asDiagonal();
  prob.Qf = (weights.terminal_scale * qdiag).asDiagonal();
  prob.R = (weights.control * Eigen::VectorXd::Ones(3)).asDiagonal();
  for (const auto& s : ref.states) prob.x_ref.push_back(pack_state(s));
  for (const auto& u : ref.controls) prob.u_ref.push_back(Eigen::Vector3d(u.vx, u.vy, u.omega));
  prob.x0 = prob.x_ref.front();
  prob.max_iterations = max_iterations;

  IlqrSolution sol = ilqr_solve(prob);
  if (diagnostics) *diagnostics = sol.diagnostics;
  if (!sol.ok) return std::nullopt;

  TrackingController c;
  c.kind = ControllerKind::ilqr;
  c.ref = std::move(ref);
  c.K = std::move(sol.K);
  c.k = std::move(sol.k);
  c.x_nom = std::move(sol.xs);
  c.u_nom = std::move(sol.us);
  return c;
}

struct TrialStats {
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
};

// Executes the controller in the (typically randomized, dynamic) environment
// for the reference horizon; success = goal reached at any step.
inline TrialStats run_controller_trials(const TrackingController& ctl,
                                        const RearrangeEnvConfig& env_cfg, int n_trials,
                                        Rng& rng) {
  TrialStats stats;
  stats.trials = n_trials;
  RearrangeEnv env(env_cfg);
  for (int trial = 0; trial < n_trials; ++trial) {
    env.reset(rng);
    bool success = false;
    for (int t = 0; t < ctl.horizon(); ++t) {
      const auto fb = env.step(ctl.control(t, env.state()), rng);
      if (fb.reward == 0.0) success = true;
    }
    stats.successes += success ? 1 : 0;
  }
  stats.success_rate = n_trials > 0 ? double(stats.successes) / n_trials : 0.0;
  return stats;
}

// ---------------------------------------------------------------------------
// CartPole oracle: iLQR optimal policy and its state-visitation distribution.

inline IlqrSolution cartpole_ilqr(const CartPoleParams& p, const CartPoleState& start,
                                  int horizon = 0) {
  if (horizon <= 0) horizon = p.episode_len;
  IlqrProblem prob;
  prob.dynamics = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    const CartPoleState s{x[0], x[1], x[2], x[3]};
    const CartPoleState n = cartpole_step(s, u[0], p);
    return Eigen::Vector4d(n.x, n.x_dot, n.theta, n.theta_dot);
  };
  Eigen::Vector4d qdiag(1.0, 0.05, 5.0, 0.05);
  prob.Q = qdiag.asDiagonal();
  prob.Qf = (200.0 * qdiag).asDiagonal();
  prob.R = Eigen::VectorXd::Constant(1, 0.01).asDiagonal();
  const Eigen::Vector4d goal_state(p.goal_x, 0.0, 0.0, 0.0);
  prob.x_ref.assign(horizon + 1, goal_state);
  prob.u_ref.assign(horizon, Eigen::VectorXd::Zero(1));
  prob.x0 = Eigen::Vector4d(start.x, start.x_dot, start.theta, start.theta_dot);
  return ilqr_solve(prob);
}

struct CartPoleOracle {
  IlqrSolution solution;
  CartPoleHistogram histogram;            // normalized state-visitation occupancy
  std::vector<CartPoleState> visited;     // raw states, for reset sampling
};

// Rolls the iLQR policy out from the start distribution n times under
// nominal dynamics and histograms every visited state.
inline CartPoleOracle cartpole_oracle_distribution(const CartPoleParams& p,
                                                   IlqrSolution solution, int n_rollouts,
                                                   Rng& rng) {
  CartPoleOracle oracle;
  oracle.solution = std::move(solution);
  const auto& sol = oracle.solution;
  const int T = int(sol.us.size());
  for (int r = 0; r < n_rollouts; ++r) {
    CartPoleEnv env(p);
    env.reset(rng);
    oracle.histogram.add(env.state());
    oracle.visited.push_back(env.state());
    for (int t = 0; t < T; ++t) {
      const Eigen::Vector4d x(env.state().x, env.state().x_dot, env.state().theta,
                              env.state().theta_dot);
      const Eigen::VectorXd u = sol.us[t] + sol.k[t] + sol.K[t] * (x - sol.xs[t]);
      env.step(std::clamp(u[0] / p.force_limit, -1.0, 1.0));
      oracle.histogram.add(env.state());
      oracle.visited.push_back(env.state());
    }
  }
  return oracle;
}

}  // namespace pushrl
