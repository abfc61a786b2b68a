#include "pushrl/trainer.hpp"

#include <gtest/gtest.h>

namespace pushrl {
namespace {

TEST(ResetDistribution, ValidatesWeights) {
  ResetDistribution d;
  d.w_start = 0.5;
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d.w_uniform = 0.5;
  EXPECT_NO_THROW(d.validate());
  EXPECT_DOUBLE_EQ(ResetDistribution::planned_mix(0.3).alpha(), 0.3);
}

TEST(SampleInitialState, AlphaZeroAlwaysCanonicalAndConsumesNoRandomness) {
  const Scene scene = make_reduced_layout();
  Rng rng(1);
  const auto state_before = rng.state();
  for (int i = 0; i < 100; ++i) {
    const WorldState s = sample_initial_state(scene, ResetDistribution{}, nullptr, rng);
    EXPECT_DOUBLE_EQ(s.robot_pose.x, scene.robot_start.x);
    EXPECT_DOUBLE_EQ(s.object_poses[0].y, scene.object_starts[0].y);
  }
  EXPECT_EQ(rng.state(), state_before);
}

PlannedTrajectory plan_reduced(int seed) {
  const Scene scene = make_reduced_layout();
  PlannerConfig cfg;
  cfg.max_iterations = 4000;
  Rng rng{std::uint64_t(seed)};
  auto res = plan(scene, cfg, rng);
  EXPECT_TRUE(res.ok());
  return *res.trajectory;
}

TEST(SampleInitialState, AlphaOneIsUniformOverTrajectoryStates) {
  const Scene scene = make_reduced_layout();
  const PlannedTrajectory traj = plan_reduced(42);
  const int n_states = int(traj.states.size());
  ASSERT_GE(n_states, 2);

  Rng rng(7);
  std::vector<int> counts(n_states, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const WorldState s =
        sample_initial_state(scene, ResetDistribution::planned_mix(1.0), &traj, rng);
    // Identify the sampled index by exact robot pose match.
    for (int j = 0; j < n_states; ++j) {
      if (s.robot_pose.x == traj.states[j].robot.x && s.robot_pose.y == traj.states[j].robot.y) {
        counts[j]++;
        break;
      }
    }
    EXPECT_TRUE(state_collision_free(scene, s));
    for (const auto& t : s.object_twists) EXPECT_DOUBLE_EQ(t.vx, 0.0);
  }
  const double expect = double(draws) / n_states;
  const double sigma = std::sqrt(expect * (1.0 - 1.0 / n_states));
  int total = 0;
  for (int c : counts) {
    EXPECT_NEAR(c, expect, 3.0 * sigma);
    total += c;
  }
  EXPECT_EQ(total, draws);
}

TEST(SampleInitialState, PlannedWithoutTrajectoryThrows) {
  const Scene scene = make_reduced_layout();
  Rng rng(1);
  EXPECT_THROW(sample_initial_state(scene, ResetDistribution::planned_mix(1.0), nullptr, rng),
               std::invalid_argument);
}

TEST(SampleInitialState, UniformDrawsAreCollisionFreeInBounds) {
  const Scene scene = make_layout(2);
  ResetDistribution d;
  d.w_start = 0.0;
  d.w_uniform = 1.0;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const WorldState s = sample_initial_state(scene, d, nullptr, rng);
    EXPECT_TRUE(state_collision_free(scene, s));
    EXPECT_TRUE(state_in_bounds(scene, s));
  }
}

TEST(Evaluate, ScriptedStraightPushSucceeds) {
  // Trivial clear-path layout: robot directly behind the cube, goal straight
  // ahead, so the constant full-speed push is a known winning sequence.
  RearrangeEnvConfig cfg;
  cfg.scene = make_reduced_layout();
  cfg.scene.robot_start = make_pose(0.0, -0.26, 0.0);
  cfg.randomize = false;
  Rng rng(5);
  const double rate = evaluate_rearrange(
      cfg,
      [](const Observation&, const Eigen::VectorXd&) {
        return Eigen::Vector3d(0.0, 1.0, 0.0);  // full-speed forward push
      },
      3, rng);
  EXPECT_DOUBLE_EQ(rate, 1.0);
}

TEST(Evaluate, ZeroPolicyFailsAndSingleEpisodeIsBinary) {
  RearrangeEnvConfig cfg;
  cfg.scene = make_reduced_layout();
  Rng rng(6);
  const double rate = evaluate_rearrange(
      cfg, [](const Observation&, const Eigen::VectorXd&) { return Eigen::Vector3d::Zero(); }, 5,
      rng);
  EXPECT_DOUBLE_EQ(rate, 0.0);

  Rng rng2(7);
  const double one = evaluate_rearrange(
      cfg, [](const Observation&, const Eigen::VectorXd&) { return Eigen::Vector3d(0, 1, 0); }, 1,
      rng2);
  EXPECT_TRUE(one == 0.0 || one == 1.0);
}

TrainConfig tiny_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.env.scene = make_reduced_layout();
  cfg.env.model = ModelKind::dynamic;
  cfg.env.randomize = true;
  cfg.agent.hidden = {16, 16};
  cfg.agent.batch = 32;
  cfg.episodes = 4;
  cfg.eval_interval = 2;
  cfg.eval_episodes = 2;
  cfg.updates_per_episode = 2;
  cfg.her_k = 2;
  cfg.buffer_capacity = 10000;
  cfg.seed = seed;
  return cfg;
}

TEST(Train, ZeroEpisodesGivesEmptyCurve) {
  TrainConfig cfg = tiny_train_config(1);
  cfg.episodes = 0;
  const TrainResult r = train_rearrange(cfg, nullptr);
  EXPECT_TRUE(r.curve.points.empty());
  EXPECT_EQ(r.episodes_run, 0);
}

TEST(Train, DeterministicCurveForFixedSeed) {
  const PlannedTrajectory traj = plan_reduced(11);
  TrainConfig cfg = tiny_train_config(9);
  cfg.resets = ResetDistribution::planned_mix(0.5);
  const TrainResult a = train_rearrange(cfg, &traj);
  const TrainResult b = train_rearrange(cfg, &traj);
  ASSERT_EQ(a.curve.points.size(), b.curve.points.size());
  for (size_t i = 0; i < a.curve.points.size(); ++i) {
    EXPECT_EQ(a.curve.points[i].episode, b.curve.points[i].episode);
    EXPECT_EQ(a.curve.points[i].success_rate, b.curve.points[i].success_rate);
  }
}

TEST(Train, PlannedResetsRequireTrajectory) {
  TrainConfig cfg = tiny_train_config(2);
  cfg.resets = ResetDistribution::planned_mix(0.5);
  EXPECT_THROW(train_rearrange(cfg, nullptr), std::invalid_argument);
}

TEST(EpisodesToThreshold, SingleCurveCrossing) {
  LearningCurve c;
  c.points = {{100, 0.1}, {300, 0.5}, {500, 0.85}, {700, 0.9}};
  const auto stats = episodes_to_threshold({c}, 0.8);
  EXPECT_DOUBLE_EQ(stats.median, 500.0);
}

TEST(EpisodesToThreshold, NeverCrossingReportsInfinity) {
  LearningCurve c;
  c.points = {{100, 0.1}, {200, 0.2}};
  const auto stats = episodes_to_threshold({c}, 0.8);
  EXPECT_TRUE(std::isinf(stats.median));
}

TEST(EpisodesToThreshold, MedianOfKnownCrossings) {
  auto curve_crossing_at = [](int ep) {
    LearningCurve c;
    c.points = {{ep / 2, 0.0}, {ep, 0.9}};
    return c;
  };
  const auto stats =
      episodes_to_threshold({curve_crossing_at(100), curve_crossing_at(200), curve_crossing_at(300)});
  EXPECT_DOUBLE_EQ(stats.median, 200.0);
  EXPECT_DOUBLE_EQ(stats.p20, 100.0);
  EXPECT_DOUBLE_EQ(stats.p80, 300.0);
}

TEST(CartPoleStudy, TinyRunIsDeterministic) {
  CartPoleStudyConfig cfg;
  cfg.agent.hidden = {16, 16};
  cfg.agent.batch = 32;
  cfg.episodes = 3;
  cfg.eval_interval = 3;
  cfg.eval_rollouts = 2;
  cfg.updates_per_episode = 2;
  cfg.her_k = 2;
  cfg.seed = 31;
  cfg.resets.w_start = 0.5;
  cfg.resets.w_oracle = 0.5;

  const IlqrSolution sol = cartpole_ilqr(cfg.params, CartPoleState{0, 0, 0.02, 0});
  ASSERT_TRUE(sol.ok);
  Rng orng(1);
  const CartPoleOracle oracle = cartpole_oracle_distribution(cfg.params, sol, 3, orng);

  const KlSeries a = cartpole_mixing_run(cfg, oracle);
  const KlSeries b = cartpole_mixing_run(cfg, oracle);
  ASSERT_EQ(a.points.size(), b.points.size());
  ASSERT_FALSE(a.points.empty());
  for (size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].kl, b.points[i].kl);
  EXPECT_GT(a.points.back().kl, 0.0);
}

}  // namespace
}  // namespace pushrl
