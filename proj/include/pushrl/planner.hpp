#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "pushrl/physics.hpp"
#include "pushrl/rng.hpp"

namespace pushrl {

// Planning configuration state: poses only, no velocities.
struct CState {
  SE2Pose robot;
  std::vector<SE2Pose> objects;

  std::vector<SE2Pose> flat() const {
    std::vector<SE2Pose> out;
    out.reserve(1 + objects.size());
    out.push_back(robot);
    out.insert(out.end(), objects.begin(), objects.end());
    return out;
  }
};

inline CState cstate_of(const WorldState& s) { return {s.robot_pose, s.object_poses}; }

// MDP lift: planner states carry no velocity, so twists are zero.
inline WorldState lift_to_world(const CState& c) {
  WorldState s;
  s.robot_pose = c.robot;
  s.object_poses = c.objects;
  s.object_twists.assign(c.objects.size(), Twist2{});
  return s;
}

struct PlannedTrajectory {
  std::vector<CState> states;    // states[0] = x_I, back() has target in X_G
  std::vector<Twist2> controls;  // size = states.size() - 1
  std::vector<double> durations;
  ModelKind model = ModelKind::quasistatic;
  std::uint64_t seed = 0;
  std::string layout_name;
};

struct PlannerConfig {
  ModelKind model = ModelKind::quasistatic;
  double goal_bias = 0.1;
  // Control durations are whole numbers of 0.1 s propagation steps.
  double duration_min = 0.5;
  double duration_max = 2.0;
  int max_iterations = 20000;
  int control_candidates = 10;
  double weight_target = 1.0;
  double weight_robot = 0.5;
  double weight_other = 0.25;
  double substep_dt = 0.1;
  Twist2 action_limit{0.25, 0.25, 2.5};
  PhysicsParams params;  // empty mass -> nominal (planning is deterministic)
};

struct PlanStats {
  int iterations = 0;
  int nodes = 0;
  double wall_seconds = 0.0;
};

struct PlanResult {
  std::optional<PlannedTrajectory> trajectory;
  PlanStats stats;
  std::string error;
  bool ok() const { return trajectory.has_value(); }
};

// Propagates a control through the planning model at 0.1 s steps. Rejected
// when any step fails or an entity leaves the table.
inline std::optional<WorldState> propagate(const Scene& scene, const WorldState& from,
                                           const Twist2& u, double duration, ModelKind model,
                                           const PhysicsParams& params, double substep_dt = 0.1) {
  if (duration <= 0.0) throw std::invalid_argument("propagate: duration must be positive");
  const int steps = std::max(1, int(std::round(duration / substep_dt)));
  WorldState s = from;
  for (int i = 0; i < steps; ++i) {
    const auto r = step_model(model, scene, s, u, substep_dt, params);
    if (!r.ok()) return std::nullopt;
    s = r.state;
    if (!state_in_bounds(scene, s)) return std::nullopt;
  }
  return s;
}

namespace detail {

struct TreeNode {
  WorldState state;
  int parent = -1;
  Twist2 control;
  double duration = 0.0;
};

inline std::vector<double> nn_weights(const Scene& scene, const PlannerConfig& cfg) {
  std::vector<double> w(1 + scene.num_objects(), cfg.weight_other);
  w[0] = cfg.weight_robot;
  w[1 + scene.target_index] = cfg.weight_target;
  return w;
}

inline double node_distance(const WorldState& a, const CState& b,
                            const std::vector<double>& w) {
  const auto qa = cstate_of(a).flat();
  const auto qb = b.flat();
  return cstate_distance(qa, qb, w);
}

inline CState sample_cstate(const Scene& scene, bool goal_biased, Rng& rng) {
  const double lim = scene.table_half_extent;
  auto rand_pose = [&] {
    return make_pose(rng.uniform(-lim, lim), rng.uniform(-lim, lim), rng.uniform(-kPi, kPi));
  };
  CState q;
  q.robot = rand_pose();
  q.objects.resize(scene.num_objects());
  for (int i = 0; i < scene.num_objects(); ++i) q.objects[i] = rand_pose();
  if (goal_biased) {
    q.objects[scene.target_index] = make_pose(scene.goal_center.x(), scene.goal_center.y(),
                                              rng.uniform(-kPi, kPi));
  }
  return q;
}

inline bool target_in_goal(const Scene& scene, const WorldState& s) {
  return (s.object_poses[scene.target_index].translation() - scene.goal_center).norm() <
         scene.goal_radius;
}

}  // namespace detail

class RrtTree {
 public:
  RrtTree(const Scene& scene, const PlannerConfig& cfg, WorldState root)
      : scene_(scene), cfg_(cfg), weights_(detail::nn_weights(scene, cfg)) {
    nodes_.push_back({std::move(root), -1, Twist2{}, 0.0});
  }

  int size() const { return int(nodes_.size()); }
  const detail::TreeNode& node(int i) const { return nodes_[i]; }

  int nearest(const CState& q) const {
    int best = 0;
    double best_d = detail::node_distance(nodes_[0].state, q, weights_);
    for (int i = 1; i < int(nodes_.size()); ++i) {
      const double d = detail::node_distance(nodes_[i].state, q, weights_);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  // Samples k candidate controls from the nearest node, keeps the valid one
  // ending closest to q_rand. Returns the new node index, or -1.
  int extend(const CState& q_rand, Rng& rng) {
    if (cfg_.control_candidates <= 0) return -1;
    const int near = nearest(q_rand);
    const int dur_lo = std::max(1, int(std::round(cfg_.duration_min / cfg_.substep_dt)));
    const int dur_hi = std::max(dur_lo, int(std::round(cfg_.duration_max / cfg_.substep_dt)));

    double best_d = std::numeric_limits<double>::infinity();
    std::optional<WorldState> best_state;
    Twist2 best_u;
    double best_T = 0.0;
    for (int c = 0; c < cfg_.control_candidates; ++c) {
      const Twist2 u{rng.uniform(-cfg_.action_limit.vx, cfg_.action_limit.vx),
                     rng.uniform(-cfg_.action_limit.vy, cfg_.action_limit.vy),
                     rng.uniform(-cfg_.action_limit.omega, cfg_.action_limit.omega)};
      const int steps = dur_lo + rng.uniform_int(dur_hi - dur_lo + 1);
      const double T = steps * cfg_.substep_dt;
      const auto end = propagate(scene_, nodes_[near].state, u, T, cfg_.model, cfg_.params,
                                 cfg_.substep_dt);
      if (!end) continue;
      const double d = detail::node_distance(*end, q_rand, weights_);
      if (d < best_d) {
        best_d = d;
        best_state = end;
        best_u = u;
        best_T = T;
      }
    }
    if (!best_state) return -1;
    nodes_.push_back({std::move(*best_state), near, best_u, best_T});
    return int(nodes_.size()) - 1;
  }

  PlannedTrajectory extract(int leaf) const {
    std::vector<int> chain;
    for (int i = leaf; i != -1; i = nodes_[i].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    PlannedTrajectory out;
    for (size_t i = 0; i < chain.size(); ++i) {
      out.states.push_back(cstate_of(nodes_[chain[i]].state));
      if (i > 0) {
        out.controls.push_back(nodes_[chain[i]].control);
        out.durations.push_back(nodes_[chain[i]].duration);
      }
    }
    return out;
  }

 private:
  const Scene& scene_;
  PlannerConfig cfg_;
  std::vector<double> weights_;
  std::vector<detail::TreeNode> nodes_;
};

// Physics-constrained RRT over the product of SE(2) poses. Deterministic
// given (seed, config, layout); planning dynamics use nominal parameters.
inline PlanResult plan(const Scene& scene, PlannerConfig cfg, Rng& rng,
                       std::optional<WorldState> x_init = std::nullopt,
                       std::uint64_t seed_label = 0) {
  if (cfg.params.mass.empty()) cfg.params = nominal_params(scene);
  const auto t0 = std::chrono::steady_clock::now();
  PlanResult res;

  WorldState root = x_init.value_or(initial_state(scene));
  if (!state_collision_free(scene, root)) {
    res.error = "initial state is in collision";
    return res;
  }

  auto finish = [&](std::optional<PlannedTrajectory> traj, int iters, int nodes,
                    const std::string& err) {
    res.trajectory = std::move(traj);
    res.stats.iterations = iters;
    res.stats.nodes = nodes;
    res.stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.error = err;
    return res;
  };

  if (detail::target_in_goal(scene, root)) {
    PlannedTrajectory traj;
    traj.states.push_back(cstate_of(root));
    traj.model = cfg.model;
    traj.seed = seed_label;
    traj.layout_name = scene.name;
    return finish(std::move(traj), 0, 1, "");
  }

  RrtTree tree(scene, cfg, root);
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const bool biased = rng.bernoulli(cfg.goal_bias);
    const CState q_rand = detail::sample_cstate(scene, biased, rng);
    const int added = tree.extend(q_rand, rng);
    if (added < 0) continue;
    if (detail::target_in_goal(scene, tree.node(added).state)) {
      PlannedTrajectory traj = tree.extract(added);
      traj.model = cfg.model;
      traj.seed = seed_label;
      traj.layout_name = scene.name;
      return finish(std::move(traj), iter, tree.size(), "");
    }
  }
  auto r = finish(std::nullopt, cfg.max_iterations, tree.size(), "max_iterations exhausted");
  return r;
}

// Replays the trajectory under its planning model; used by the
// self-consistency checks and to densify references for tracking control.
inline std::optional<WorldState> replay_trajectory(const Scene& scene,
                                                   const PlannedTrajectory& traj,
                                                   const PhysicsParams& params,
                                                   double substep_dt = 0.1) {
  if (traj.states.empty()) return std::nullopt;
  WorldState s = lift_to_world(traj.states.front());
  for (size_t i = 0; i < traj.controls.size(); ++i) {
    const auto next =
        propagate(scene, s, traj.controls[i], traj.durations[i], traj.model, params, substep_dt);
    if (!next) return std::nullopt;
    s = *next;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Trajectory file format

inline KvFile trajectory_to_kv(const PlannedTrajectory& traj) {
  KvFile kv;
  kv.set_int("schema_version", KvFile::kSchemaVersion);
  kv.set("kind", "trajectory");
  kv.set("model", model_name(traj.model));
  kv.set_int("seed", (long long)traj.seed);
  kv.set("layout", traj.layout_name);
  const int m = traj.states.empty() ? 0 : int(traj.states.front().objects.size());
  kv.set_int("objects.count", m);
  kv.set_int("states.count", (long long)traj.states.size());
  for (size_t i = 0; i < traj.states.size(); ++i) {
    std::vector<double> flat;
    for (const SE2Pose& p : traj.states[i].flat()) {
      flat.push_back(p.x);
      flat.push_back(p.y);
      flat.push_back(p.theta);
    }
    kv.set_doubles("state." + std::to_string(i), flat);
  }
  for (size_t i = 0; i < traj.controls.size(); ++i) {
    kv.set_doubles("control." + std::to_string(i),
                   {traj.controls[i].vx, traj.controls[i].vy, traj.controls[i].omega});
    kv.set_double("duration." + std::to_string(i), traj.durations[i]);
  }
  return kv;
}

inline PlannedTrajectory trajectory_from_kv(const KvFile& kv) {
  const long long ver = kv.require_int("schema_version");
  if (ver != KvFile::kSchemaVersion)
    throw std::runtime_error("trajectory: unsupported schema_version " + std::to_string(ver));
  if (kv.get_string("kind", "") != "trajectory")
    throw std::runtime_error("trajectory: wrong file kind");
  PlannedTrajectory traj;
  traj.model = model_from_name(kv.require("model"));
  traj.seed = (std::uint64_t)kv.require_int("seed");
  traj.layout_name = kv.get_string("layout", "");
  const int m = int(kv.require_int("objects.count"));
  const int n = int(kv.require_int("states.count"));
  for (int i = 0; i < n; ++i) {
    const auto flat = kv.require_doubles("state." + std::to_string(i), 3 * (1 + m));
    CState c;
    c.robot = SE2Pose{flat[0], flat[1], flat[2]};
    for (int o = 0; o < m; ++o)
      c.objects.push_back(SE2Pose{flat[3 + 3 * o], flat[4 + 3 * o], flat[5 + 3 * o]});
    traj.states.push_back(std::move(c));
  }
  for (int i = 0; i + 1 < n; ++i) {
    const auto u = kv.require_doubles("control." + std::to_string(i), 3);
    traj.controls.push_back({u[0], u[1], u[2]});
    traj.durations.push_back(kv.require_double("duration." + std::to_string(i)));
  }
  return traj;
}

}  // namespace pushrl
