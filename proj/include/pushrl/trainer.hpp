#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pushrl/baselines.hpp"
#include "pushrl/cartpole.hpp"
#include "pushrl/ddpg.hpp"
#include "pushrl/env.hpp"
#include "pushrl/planner.hpp"

namespace pushrl {

enum class ResetKind { start, uniform, planned, oracle };

// Mixture over episode-reset sources. alpha is the planned-reset mass; the
// remainder splits over the start, uniform, and oracle distributions.
struct ResetDistribution {
  double w_start = 1.0;
  double w_uniform = 0.0;
  double w_planned = 0.0;
  double w_oracle = 0.0;

  double alpha() const { return w_planned; }

  static ResetDistribution planned_mix(double alpha) {
    ResetDistribution d;
    d.w_planned = alpha;
    d.w_start = 1.0 - alpha;
    return d;
  }

  void validate() const {
    const double sum = w_start + w_uniform + w_planned + w_oracle;
    if (w_start < 0 || w_uniform < 0 || w_planned < 0 || w_oracle < 0 ||
        std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("reset distribution: weights must be >= 0 and sum to 1");
  }

  // Degenerate start-only mixtures consume no randomness, so alpha = 0 runs
  // are bit-identical to a plain HER loop.
  ResetKind sample(Rng& rng) const {
    if (w_start == 1.0) return ResetKind::start;
    const double u = rng.uniform();
    if (u < w_planned) return ResetKind::planned;
    if (u < w_planned + w_uniform) return ResetKind::uniform;
    if (u < w_planned + w_uniform + w_oracle) return ResetKind::oracle;
    return ResetKind::start;
  }
};

// Initial-state sampler for the rearrangement MDP. Planned resets draw
// uniformly over the trajectory's states and are lifted with zero twists.
inline WorldState sample_initial_state(const Scene& scene, const ResetDistribution& dist,
                                       const PlannedTrajectory* traj, Rng& rng) {
  dist.validate();
  const ResetKind kind = dist.sample(rng);
  switch (kind) {
    case ResetKind::start:
      return initial_state(scene);
    case ResetKind::oracle:
      throw std::invalid_argument("oracle resets are only defined for the cartpole study");
    case ResetKind::uniform: {
      const double lim = scene.table_half_extent;
      for (int attempt = 0; attempt < 1000; ++attempt) {
        WorldState s = initial_state(scene);
        s.robot_pose = make_pose(rng.uniform(-lim, lim), rng.uniform(-lim, lim),
                                 rng.uniform(-kPi, kPi));
        for (auto& p : s.object_poses)
          p = make_pose(rng.uniform(-lim, lim), rng.uniform(-lim, lim), rng.uniform(-kPi, kPi));
        if (state_collision_free(scene, s) && state_in_bounds(scene, s)) return s;
      }
      return initial_state(scene);
    }
    case ResetKind::planned: {
      if (!traj || traj->states.empty())
        throw std::invalid_argument("planned resets requested without a planned trajectory");
      const int idx = rng.uniform_int(int(traj->states.size()));
      WorldState s = lift_to_world(traj->states[idx]);
      if (state_collision_free(scene, s)) return s;
      // Tolerance disagreements get nudged by up to 1 mm, then we fall back
      // to the start distribution for this episode.
      for (int attempt = 0; attempt < 10; ++attempt) {
        WorldState p = s;
        for (auto& pose : p.object_poses)
          pose = make_pose(pose.x + rng.uniform(-1e-3, 1e-3),
                           pose.y + rng.uniform(-1e-3, 1e-3), pose.theta);
        if (state_collision_free(scene, p)) return p;
      }
      return initial_state(scene);
    }
  }
  return initial_state(scene);
}

struct CurvePoint {
  int episode = 0;
  double success_rate = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  std::uint64_t seed = 0;
  std::string config_id;
};

// Deterministic evaluation from the true start distribution: no exploration
// noise, success = goal reached at any step of the episode.
template <class Policy>
double evaluate_rearrange(const RearrangeEnvConfig& cfg, Policy&& policy, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("evaluate: need at least one episode");
  RearrangeEnv env(cfg);
  int successes = 0;
  for (int ep = 0; ep < n; ++ep) {
    Observation obs = env.reset(rng);
    bool success = false;
    for (int t = 0; t < env.episode_len(); ++t) {
      const Eigen::VectorXd a = policy(obs, Eigen::Vector2d(env.goal()));
      const auto fb = env.step(env.denormalize_action(a), rng);
      obs = fb.obs;
      if (fb.reward == 0.0) success = true;
    }
    successes += success ? 1 : 0;
  }
  return double(successes) / n;
}

struct TrainConfig {
  RearrangeEnvConfig env;  // Dynamic model with domain randomization by default
  DdpgConfig agent;
  ResetDistribution resets;
  int episodes = 1000;
  int eval_interval = 50;
  int eval_episodes = 20;
  int updates_per_episode = 40;
  int target_update_interval = 1;  // polyak cadence, in optimizer steps
  int her_k = 4;
  size_t buffer_capacity = 1000000;
  std::uint64_t seed = 0;
  std::string config_id;
};

struct TrainResult {
  LearningCurve curve;
  DdpgAgent agent;
  int episodes_run = 0;
};

// The planned-episodic-resets training loop: per episode, reset from the
// mixture, roll out the behavior policy in the randomized dynamic
// environment, store the HER-relabeled episode, then run optimizer cycles.
// Evaluation always resets from the start distribution.
inline TrainResult train_rearrange(TrainConfig cfg, const PlannedTrajectory* traj) {
  cfg.resets.validate();
  if (cfg.resets.w_planned > 0.0 && (!traj || traj->states.empty()))
    throw std::invalid_argument("train: planned resets enabled but no trajectory given");

  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng env_rng(derive_seed(cfg.seed, 2));
  Rng reset_rng(derive_seed(cfg.seed, 3));
  Rng action_rng(derive_seed(cfg.seed, 4));
  Rng her_rng(derive_seed(cfg.seed, 5));
  Rng batch_rng(derive_seed(cfg.seed, 6));

  RearrangeEnv env(cfg.env);
  DdpgAgent agent(env.obs_dim(), env.goal_dim(), env.action_dim(), cfg.agent, init_rng);
  ReplayBuffer buffer(cfg.buffer_capacity);
  const RewardFn reward_fn = [&env](const Eigen::VectorXd& achieved,
                                    const Eigen::VectorXd& goal) {
    return env.reward_of(achieved, goal);
  };

  TrainResult result{LearningCurve{{}, cfg.seed, cfg.config_id}, agent, 0};

  for (int ep = 1; ep <= cfg.episodes; ++ep) {
    const WorldState s0 = sample_initial_state(cfg.env.scene, cfg.resets, traj, reset_rng);
    Observation obs = env.reset_from(s0, env_rng);
    const Eigen::VectorXd goal = env.goal();

    std::vector<Transition> episode;
    episode.reserve(env.episode_len());
    for (int t = 0; t < env.episode_len(); ++t) {
      Transition tr;
      tr.obs = obs;
      tr.goal = goal;
      tr.action = agent.act(obs, goal, true, action_rng);
      const auto fb = env.step(env.denormalize_action(tr.action), env_rng);
      tr.reward = fb.reward;
      tr.next_obs = fb.obs;
      tr.achieved_next = env.achieved_vector();
      tr.done = fb.done;
      obs = fb.obs;
      episode.push_back(std::move(tr));
    }

    for (const auto& tr : episode) {
      agent.observe_for_normalization(tr.obs, tr.goal);
      agent.goal_norm().update(tr.achieved_next.head(env.goal_dim()));
    }
    for (auto& tr : her_relabel(episode, cfg.her_k, her_rng, reward_fn))
      buffer.push(std::move(tr));

    if (buffer.size() >= size_t(cfg.agent.batch)) {
      std::vector<const Transition*> batch(cfg.agent.batch);
      for (int u = 0; u < cfg.updates_per_episode; ++u) {
        for (auto& slot : batch) slot = &buffer.at(size_t(batch_rng.uniform_int(int(buffer.size()))));
        agent.update(batch, (u + 1) % cfg.target_update_interval == 0);
      }
    }

    if (cfg.eval_interval > 0 && (ep % cfg.eval_interval == 0 || ep == cfg.episodes)) {
      Rng eval_rng(derive_seed(cfg.seed, 50000 + std::uint64_t(ep)));
      RearrangeEnvConfig eval_cfg = cfg.env;
      const double rate = evaluate_rearrange(
          eval_cfg,
          [&agent](const Observation& o, const Eigen::VectorXd& g) {
            Rng none(0);
            return agent.act(o, g, false, none);
          },
          cfg.eval_episodes, eval_rng);
      if (result.curve.points.empty() || result.curve.points.back().episode != ep)
        result.curve.points.push_back({ep, rate});
    }
    result.episodes_run = ep;
  }

  result.agent = std::move(agent);
  return result;
}

// Desk-scale training configuration shared by the packaged experiment
// presets and the acceptance experiments: small networks, the reduced
// layout's dynamic environment with domain randomization.
inline TrainConfig desk_train_config(const Scene& scene, double alpha, std::uint64_t seed,
                                     const std::string& config_id, int episodes) {
  TrainConfig cfg;
  cfg.env.scene = scene;
  cfg.env.model = ModelKind::dynamic;
  cfg.env.randomize = true;
  cfg.agent.hidden = {64, 64, 64};
  cfg.agent.batch = 128;
  cfg.agent.lr = 1e-3;
  cfg.agent.polyak = 0.98;
  cfg.agent.action_l2 = 0.1;
  cfg.episodes = episodes;
  cfg.eval_interval = 50;
  cfg.eval_episodes = 20;
  cfg.updates_per_episode = 40;
  cfg.seed = seed;
  cfg.resets = ResetDistribution::planned_mix(alpha);
  cfg.config_id = config_id;
  return cfg;
}

// First curve checkpoint at or above the threshold, per seed; infinity when
// the curve never crosses.
struct ThresholdStats {
  double median = std::numeric_limits<double>::infinity();
  double p20 = std::numeric_limits<double>::infinity();
  double p80 = std::numeric_limits<double>::infinity();
  std::vector<double> per_curve;  // episode counts, +inf sentinel
};

inline ThresholdStats episodes_to_threshold(const std::vector<LearningCurve>& curves,
                                            double threshold = 0.8) {
  if (curves.empty()) throw std::invalid_argument("episodes_to_threshold: need >= 1 curve");
  ThresholdStats out;
  for (const auto& c : curves) {
    double crossing = std::numeric_limits<double>::infinity();
    for (const auto& p : c.points) {
      if (p.success_rate >= threshold) {
        crossing = p.episode;
        break;
      }
    }
    out.per_curve.push_back(crossing);
  }
  std::vector<double> sorted = out.per_curve;
  std::sort(sorted.begin(), sorted.end());
  auto pick = [&](double q) {
    const size_t idx = size_t(std::llround(q * double(sorted.size() - 1)));
    return sorted[idx];
  };
  out.p20 = pick(0.2);
  out.median = pick(0.5);
  out.p80 = pick(0.8);
  return out;
}

// ---------------------------------------------------------------------------
// CartPole reset-mixing study

struct CartPoleUniformBox {
  double x_lo = -0.8, x_hi = 1.0;
  double v_lo = -1.0, v_hi = 1.0;
  double th_lo = -0.25, th_hi = 0.25;
  double w_lo = -1.0, w_hi = 1.0;
};

struct CartPoleStudyConfig {
  CartPoleParams params;
  DdpgConfig agent;
  ResetDistribution resets;
  CartPoleUniformBox uniform_box;
  int episodes = 300;
  int eval_interval = 30;
  int eval_rollouts = 10;
  int updates_per_episode = 40;
  int target_update_interval = 1;  // polyak cadence, in optimizer steps
  int her_k = 4;
  size_t buffer_capacity = 200000;
  std::uint64_t seed = 0;
  std::string config_id;
};

struct KlPoint {
  int episode = 0;
  double kl = 0.0;
};

struct KlSeries {
  std::vector<KlPoint> points;
  std::uint64_t seed = 0;
  std::string config_id;
};

inline CartPoleState sample_cartpole_reset(const CartPoleStudyConfig& cfg,
                                           const CartPoleOracle* oracle, CartPoleEnv& env,
                                           Rng& rng) {
  switch (cfg.resets.sample(rng)) {
    case ResetKind::planned:
      throw std::invalid_argument("planned resets are only defined for rearrangement");
    case ResetKind::oracle: {
      if (!oracle || oracle->visited.empty())
        throw std::invalid_argument("oracle resets requested without an oracle distribution");
      return oracle->visited[size_t(rng.uniform_int(int(oracle->visited.size())))];
    }
    case ResetKind::uniform: {
      const auto& b = cfg.uniform_box;
      return {rng.uniform(b.x_lo, b.x_hi), rng.uniform(b.v_lo, b.v_hi),
              rng.uniform(b.th_lo, b.th_hi), rng.uniform(b.w_lo, b.w_hi)};
    }
    case ResetKind::start:
    default: {
      CartPoleState s;
      s.x = rng.uniform(-0.05, 0.05);
      s.x_dot = rng.uniform(-0.05, 0.05);
      s.theta = rng.uniform(-0.05, 0.05);
      s.theta_dot = rng.uniform(-0.05, 0.05);
      return s;
    }
  }
}

// Trains goal-conditioned DDPG+HER on CartPole under the reset mixture and
// periodically records KL(greedy policy's state occupancy || oracle
// occupancy), rolling out from the start distribution.
inline KlSeries cartpole_mixing_run(const CartPoleStudyConfig& cfg, const CartPoleOracle& oracle) {
  cfg.resets.validate();

  Rng init_rng(derive_seed(cfg.seed, 11));
  Rng env_rng(derive_seed(cfg.seed, 12));
  Rng reset_rng(derive_seed(cfg.seed, 13));
  Rng action_rng(derive_seed(cfg.seed, 14));
  Rng her_rng(derive_seed(cfg.seed, 15));
  Rng batch_rng(derive_seed(cfg.seed, 16));

  CartPoleEnv env(cfg.params);
  DdpgAgent agent(env.obs_dim(), env.goal_dim(), env.action_dim(), cfg.agent, init_rng);
  ReplayBuffer buffer(cfg.buffer_capacity);
  const RewardFn reward_fn = [&env](const Eigen::VectorXd& achieved,
                                    const Eigen::VectorXd& goal) {
    return env.reward_of(achieved, goal);
  };

  KlSeries series{{}, cfg.seed, cfg.config_id};

  for (int ep = 1; ep <= cfg.episodes; ++ep) {
    env.reset_from(sample_cartpole_reset(cfg, &oracle, env, reset_rng));
    Eigen::VectorXd obs = env.obs();
    const Eigen::VectorXd goal = env.goal();

    std::vector<Transition> episode;
    episode.reserve(cfg.params.episode_len);
    for (int t = 0; t < cfg.params.episode_len; ++t) {
      Transition tr;
      tr.obs = obs;
      tr.goal = goal;
      tr.action = agent.act(obs, goal, true, action_rng);
      const auto fb = env.step(tr.action[0]);
      tr.reward = fb.reward;
      tr.next_obs = fb.obs;
      tr.achieved_next = env.achieved_vector();
      tr.done = fb.done;
      obs = fb.obs;
      episode.push_back(std::move(tr));
    }
    for (const auto& tr : episode) {
      agent.observe_for_normalization(tr.obs, tr.goal);
      agent.goal_norm().update(tr.achieved_next.head(1));
    }
    for (auto& tr : her_relabel(episode, cfg.her_k, her_rng, reward_fn))
      buffer.push(std::move(tr));

    if (buffer.size() >= size_t(cfg.agent.batch)) {
      std::vector<const Transition*> batch(cfg.agent.batch);
      for (int u = 0; u < cfg.updates_per_episode; ++u) {
        for (auto& slot : batch) slot = &buffer.at(size_t(batch_rng.uniform_int(int(buffer.size()))));
        agent.update(batch, (u + 1) % cfg.target_update_interval == 0);
      }
    }

    if (cfg.eval_interval > 0 && (ep % cfg.eval_interval == 0 || ep == cfg.episodes)) {
      Rng eval_rng(derive_seed(cfg.seed, 70000 + std::uint64_t(ep)));
      CartPoleHistogram hist;
      CartPoleEnv eval_env(cfg.params);
      for (int r = 0; r < cfg.eval_rollouts; ++r) {
        eval_env.reset(eval_rng);
        hist.add(eval_env.state());
        Eigen::VectorXd o = eval_env.obs();
        for (int t = 0; t < cfg.params.episode_len; ++t) {
          Rng none(0);
          const Eigen::VectorXd a = agent.act(o, eval_env.goal(), false, none);
          o = eval_env.step(a[0]).obs;
          hist.add(eval_env.state());
        }
      }
      const double kl = CartPoleHistogram::kl(hist, oracle.histogram);
      if (series.points.empty() || series.points.back().episode != ep)
        series.points.push_back({ep, kl});
    }
  }
  return series;
}

}  // namespace pushrl
