#pragma once

#include <Eigen/Dense>

#include "pushrl/physics.hpp"
#include "pushrl/rng.hpp"
#include "pushrl/scene.hpp"

namespace pushrl {

using Observation = Eigen::VectorXd;

struct Goal {
  Vec2 target_position = Vec2::Zero();
};

struct RearrangeEnvConfig {
  Scene scene;
  ModelKind model = ModelKind::dynamic;
  PhysicsParams nominal;  // empty -> nominal_params(scene)
  int episode_len = 0;    // 0 -> scene default
  double obs_noise_pos = 0.0;  // uniform +-
  double obs_noise_ang = 0.0;
  bool randomize = false;
  double randomization_scale = 2.0;
  double goal_radius = 0.0;  // 0 -> scene default
  Twist2 action_limit{0.25, 0.25, 2.5};
  double control_dt = 0.1;
};

// (x, y, sin theta, cos theta) per movable entity, robot first. With the
// standard three-object layouts this is the 16-dimensional observation.
inline Observation observe(const Scene& scene, const WorldState& s, double noise_pos,
                           double noise_ang, Rng& rng) {
  const int n = 1 + scene.num_objects();
  Observation obs(4 * n);
  for (int i = 0; i < n; ++i) {
    const SE2Pose& p = i == 0 ? s.robot_pose : s.object_poses[i - 1];
    double x = p.x, y = p.y, th = p.theta;
    if (noise_pos > 0.0) {
      x += rng.uniform(-noise_pos, noise_pos);
      y += rng.uniform(-noise_pos, noise_pos);
    }
    if (noise_ang > 0.0) th += rng.uniform(-noise_ang, noise_ang);
    obs[4 * i + 0] = x;
    obs[4 * i + 1] = y;
    obs[4 * i + 2] = std::sin(th);
    obs[4 * i + 3] = std::cos(th);
  }
  return obs;
}

class RearrangeEnv {
 public:
  explicit RearrangeEnv(RearrangeEnvConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.nominal.mass.empty()) cfg_.nominal = nominal_params(cfg_.scene);
    if (cfg_.episode_len == 0) cfg_.episode_len = cfg_.scene.episode_len;
    if (cfg_.goal_radius == 0.0) cfg_.goal_radius = cfg_.scene.goal_radius;
    params_ = cfg_.nominal;
    state_ = initial_state(cfg_.scene);
  }

  int obs_dim() const { return 4 * (1 + cfg_.scene.num_objects()); }
  static constexpr int goal_dim() { return 2; }
  static constexpr int action_dim() { return 3; }

  const RearrangeEnvConfig& config() const { return cfg_; }
  const Scene& scene() const { return cfg_.scene; }
  const WorldState& state() const { return state_; }
  const PhysicsParams& params() const { return params_; }
  int steps() const { return steps_; }
  int episode_len() const { return cfg_.episode_len; }

  Vec2 goal() const { return cfg_.scene.goal_center; }
  Vec2 achieved() const {
    return state_.object_poses[cfg_.scene.target_index].translation();
  }
  // Target position plus pose context; head(goal_dim) is the achieved goal.
  Eigen::VectorXd achieved_vector() const {
    const Vec2 a = achieved();
    return Eigen::Vector2d(a.x(), a.y());
  }

  double reward_of(const Eigen::VectorXd& achieved, const Eigen::VectorXd& goal) const {
    const double dx = achieved[0] - goal[0], dy = achieved[1] - goal[1];
    return std::hypot(dx, dy) < cfg_.goal_radius ? 0.0 : -1.0;
  }

  Observation reset(Rng& rng) { return reset_from(initial_state(cfg_.scene), rng); }

  // Episode reset to an arbitrary collision-free state; physics parameters
  // are resampled here when randomization is on and held for the episode.
  Observation reset_from(const WorldState& s0, Rng& rng) {
    if (!state_collision_free(cfg_.scene, s0))
      throw std::invalid_argument("env reset: initial state is in collision");
    params_ = cfg_.randomize ? sample_params(cfg_.nominal, rng, cfg_.randomization_scale)
                             : cfg_.nominal;
    state_ = s0;
    if (int(state_.object_twists.size()) != cfg_.scene.num_objects())
      state_.object_twists.assign(cfg_.scene.num_objects(), Twist2{});
    steps_ = 0;
    return observe(cfg_.scene, state_, cfg_.obs_noise_pos, cfg_.obs_noise_ang, rng);
  }

  struct Feedback {
    Observation obs;
    double reward;  // {-1, 0}
    bool done;
  };

  Feedback step(const Twist2& u_raw, Rng& rng) {
    const Twist2 u{std::clamp(u_raw.vx, -cfg_.action_limit.vx, cfg_.action_limit.vx),
                   std::clamp(u_raw.vy, -cfg_.action_limit.vy, cfg_.action_limit.vy),
                   std::clamp(u_raw.omega, -cfg_.action_limit.omega, cfg_.action_limit.omega)};
    const auto r = step_model(cfg_.model, cfg_.scene, state_, u, cfg_.control_dt, params_);
    if (r.ok()) state_ = r.state;  // jammed quasi-static/weld commands are no-ops
    clamp_robot_to_table();
    ++steps_;
    Feedback fb;
    fb.obs = observe(cfg_.scene, state_, cfg_.obs_noise_pos, cfg_.obs_noise_ang, rng);
    fb.reward = reward_of(achieved_vector(), Eigen::Vector2d(goal()));
    fb.done = steps_ >= cfg_.episode_len;
    return fb;
  }

  // Action in [-1,1]^3 scaled to the velocity limits.
  Twist2 denormalize_action(const Eigen::VectorXd& a) const {
    return {a[0] * cfg_.action_limit.vx, a[1] * cfg_.action_limit.vy,
            a[2] * cfg_.action_limit.omega};
  }

 private:
  void clamp_robot_to_table() {
    // The arm stays over the table; objects may slide to the edge freely.
    const double lim = cfg_.scene.table_half_extent;
    auto& p = state_.robot_pose;
    p = make_pose(std::clamp(p.x, -lim, lim), std::clamp(p.y, -lim, lim), p.theta);
  }

  RearrangeEnvConfig cfg_;
  PhysicsParams params_;
  WorldState state_;
  int steps_ = 0;
};

}  // namespace pushrl
