#include "pushrl/physics.hpp"

#include <gtest/gtest.h>

#include "pushrl/rng.hpp"

namespace pushrl {
namespace {

Scene single_cube_scene() {
  Scene s = make_reduced_layout();
  s.object_starts = {make_pose(0.0, 0.0, 0.0)};
  s.robot_start = make_pose(-0.12, 0.0, 0.0);  // +x face exactly touching the cube
  return s;
}

TEST(LimitSurface, PureForceGivesPureTranslation) {
  const LimitSurface ls = make_limit_surface(0.5, 0.1, 0.024);
  const Twist2 v = limit_surface_velocity(ls, 0.3, 0.0, 0.0);
  EXPECT_GT(v.vx, 0.0);
  EXPECT_DOUBLE_EQ(v.vy, 0.0);
  EXPECT_DOUBLE_EQ(v.omega, 0.0);
}

TEST(LimitSurface, PureMomentGivesPureRotation) {
  const LimitSurface ls = make_limit_surface(0.5, 0.1, 0.024);
  const Twist2 v = limit_surface_velocity(ls, 0.0, 0.0, 0.005);
  EXPECT_DOUBLE_EQ(v.vx, 0.0);
  EXPECT_DOUBLE_EQ(v.vy, 0.0);
  EXPECT_GT(v.omega, 0.0);
}

TEST(LimitSurface, ZeroWrenchThrows) {
  const LimitSurface ls = make_limit_surface(0.5, 0.1, 0.024);
  EXPECT_THROW(limit_surface_velocity(ls, 0.0, 0.0, 0.0), std::invalid_argument);
}

// Finite-difference normal of the ellipsoid function, compared as an angle in
// the scaled twist space.
TEST(LimitSurface, MatchesFiniteDifferenceNormal) {
  const LimitSurface ls = make_limit_surface(0.5, 0.1, 0.024);
  const double c = ls.m_max / ls.f_max;
  auto ellipsoid = [&](double fx, double fy, double m) {
    return fx * fx / (ls.f_max * ls.f_max) + fy * fy / (ls.f_max * ls.f_max) +
           m * m / (ls.m_max * ls.m_max);
  };
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    // Random wrench scaled onto the surface.
    double fx = rng.normal(), fy = rng.normal(), m = rng.normal() * c;
    const double scale = 1.0 / std::sqrt(ellipsoid(fx, fy, m));
    fx *= scale;
    fy *= scale;
    m *= scale;

    const Twist2 v = limit_surface_velocity(ls, fx, fy, m);

    const double h = 1e-7;
    Eigen::Vector3d g((ellipsoid(fx + h, fy, m) - ellipsoid(fx - h, fy, m)) / (2 * h),
                      (ellipsoid(fx, fy + h, m) - ellipsoid(fx, fy - h, m)) / (2 * h),
                      (ellipsoid(fx, fy, m + h) - ellipsoid(fx, fy, m - h)) / (2 * h));
    Eigen::Vector3d a(v.vx, v.vy, v.omega * c);
    Eigen::Vector3d b(g.x(), g.y(), g.z() * c);
    a.normalize();
    b.normalize();
    const double angle = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
    EXPECT_LT(angle, 1e-6);
  }
}

TEST(StepQuasistatic, ZeroCommandIsIdentity) {
  const Scene scene = make_layout(1);
  const PhysicsParams params = nominal_params(scene);
  WorldState s = initial_state(scene);
  s.object_poses[1] = make_pose(0.2, 0.2, 1.234);  // arbitrary clean state
  const auto r = step_quasistatic(scene, s, Twist2{}, 0.1, params);
  ASSERT_TRUE(r.ok());
  for (int i = 0; i < scene.num_objects(); ++i) {
    EXPECT_DOUBLE_EQ(r.state.object_poses[i].x, s.object_poses[i].x);
    EXPECT_DOUBLE_EQ(r.state.object_poses[i].y, s.object_poses[i].y);
    EXPECT_DOUBLE_EQ(r.state.object_poses[i].theta, s.object_poses[i].theta);
  }
  EXPECT_DOUBLE_EQ(r.state.robot_pose.x, s.robot_pose.x);
}

TEST(StepQuasistatic, DeadCenterFacePushTranslatesWithRobot) {
  const Scene scene = single_cube_scene();
  const PhysicsParams params = nominal_params(scene);
  const WorldState s = initial_state(scene);
  const auto r = step_quasistatic(scene, s, Twist2{0.1, 0.0, 0.0}, 1.0, params);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.state.object_poses[0].x, 0.1, 1e-9);
  EXPECT_NEAR(r.state.object_poses[0].y, 0.0, 1e-9);
  EXPECT_NEAR(r.state.object_poses[0].theta, 0.0, 1e-9);
  EXPECT_NEAR(r.state.robot_pose.x, -0.02, 1e-12);
  EXPECT_DOUBLE_EQ(r.state.object_twists[0].vx, 0.0);  // at rest in returned state
}

// Brute-force quasi-static push oracle: sweep force directions across the
// friction cone, map each through the limit surface, and keep the motion
// that is kinematically consistent with the pusher velocity (sticking if
// the contact point can track it, else the nearer cone edge).
Twist2 wrench_search_oracle(const Vec2& center, const Vec2& contact, const Vec2& n,
                            const Vec2& vp, double mu, double c) {
  const Vec2 p_rel = contact - center;
  const Vec2 t(-n.y(), n.x());
  const double cone = std::atan(mu);
  const double beta_p = std::atan2(vp.dot(t), vp.dot(n));
  auto twist_of = [&](double phi) {
    const Vec2 f = n * std::cos(phi) + t * std::sin(phi);
    return Twist2{f.x(), f.y(), cross2(p_rel, f) / (c * c)};
  };
  auto contact_vel = [&](const Twist2& w) {
    return Vec2(w.vx - w.omega * p_rel.y(), w.vy + w.omega * p_rel.x());
  };
  const int kSteps = 4000;
  double best_phi = -cone;
  double best_err = 1e300;
  for (int i = 0; i <= kSteps; ++i) {
    const double phi = -cone + 2.0 * cone * i / kSteps;
    const Vec2 uc = contact_vel(twist_of(phi));
    const double beta = std::atan2(uc.dot(t), uc.dot(n));
    const double err = std::abs(beta - beta_p);
    if (err < best_err) {
      best_err = err;
      best_phi = phi;
    }
  }
  const Twist2 d = twist_of(best_phi);
  const Vec2 uc = contact_vel(d);
  double s;
  if (best_err < 1e-3) {
    s = vp.norm() / uc.norm();  // sticking: track the pusher point
  } else {
    s = vp.dot(n) / uc.dot(n);  // sliding: match normal approach speed
  }
  return {s * d.vx, s * d.vy, s * d.omega};
}

TEST(SolvePush, MatchesWrenchSearchOracle) {
  Rng rng(17);
  const double c = 0.024;
  for (int i = 0; i < 500; ++i) {
    const Vec2 center(0.0, 0.0);
    // Contact somewhere on the cube boundary, normal pointing inward.
    const int side = rng.uniform_int(4);
    const double along = rng.uniform(-0.04, 0.04);
    Vec2 contact, n;
    switch (side) {
      case 0: contact = {-0.04, along}; n = {1, 0}; break;
      case 1: contact = {0.04, along}; n = {-1, 0}; break;
      case 2: contact = {along, -0.04}; n = {0, 1}; break;
      default: contact = {along, 0.04}; n = {0, -1}; break;
    }
    const double mu = rng.uniform(0.1, 1.0);
    // Pusher velocity with positive approach.
    const double beta = rng.uniform(-1.2, 1.2);
    const double speed = rng.uniform(0.01, 0.3);
    const Vec2 t(-n.y(), n.x());
    const Vec2 vp = speed * (std::cos(beta) * n + std::sin(beta) * t);

    const auto got = detail::solve_push(center, contact, n, vp, mu, c);
    ASSERT_TRUE(got.has_value());
    const Twist2 want = wrench_search_oracle(center, contact, n, vp, mu, c);
    const double scale = std::max({std::abs(want.vx), std::abs(want.vy), c * std::abs(want.omega), 1e-9});
    EXPECT_NEAR(got->vx, want.vx, 2e-3 * scale) << "case " << i;
    EXPECT_NEAR(got->vy, want.vy, 2e-3 * scale) << "case " << i;
    EXPECT_NEAR(c * got->omega, c * want.omega, 4e-3 * scale) << "case " << i;
  }
}

TEST(StepQuasistatic, CornerPushSpinSignMatchesOracle) {
  // Robot pushes upward, its face covering only the left part of the cube's
  // bottom face; the contact centroid is left of center so the cube must yaw
  // clockwise (negative omega integrated into theta).
  Scene scene = single_cube_scene();
  scene.robot_start = make_pose(-0.06, -0.08, 0.0);
  const PhysicsParams params = nominal_params(scene);
  const WorldState s = initial_state(scene);
  const auto r = step_quasistatic(scene, s, Twist2{0.0, 0.05, 0.0}, 0.5, params);
  ASSERT_TRUE(r.ok());

  const Vec2 contact(-0.01, -0.04);  // overlap segment [-0.04, 0.02] centroid
  const Twist2 oracle = wrench_search_oracle(Vec2(0, 0), contact, Vec2(0, 1), Vec2(0, 0.05),
                                             params.friction_robot_object,
                                             params.pressure_moment_const);
  ASSERT_LT(oracle.omega, 0.0);
  EXPECT_LT(r.state.object_poses[0].theta, -1e-4);
}

TEST(StepQuasistatic, RestInvariantOnRandomCleanStates) {
  const Scene scene = make_layout(2);
  const PhysicsParams params = nominal_params(scene);
  Rng rng(9);
  int tested = 0;
  while (tested < 50) {
    WorldState s = initial_state(scene);
    for (auto& p : s.object_poses)
      p = make_pose(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-3.1, 3.1));
    if (!state_collision_free(scene, s)) continue;
    ++tested;
    const auto r = step_quasistatic(scene, s, Twist2{}, 0.1, params);
    ASSERT_TRUE(r.ok());
    for (int i = 0; i < scene.num_objects(); ++i) {
      EXPECT_DOUBLE_EQ(r.state.object_poses[i].x, s.object_poses[i].x);
      EXPECT_DOUBLE_EQ(r.state.object_poses[i].y, s.object_poses[i].y);
      EXPECT_DOUBLE_EQ(r.state.object_poses[i].theta, s.object_poses[i].theta);
    }
  }
}

TEST(StepQuasistatic, NoPenetrationAfterAcceptedSteps) {
  const Scene scene = make_layout(1);
  const PhysicsParams params = nominal_params(scene);
  Rng rng(21);
  WorldState s = initial_state(scene);
  for (int k = 0; k < 200; ++k) {
    const Twist2 u{rng.uniform(-0.25, 0.25), rng.uniform(-0.25, 0.25), rng.uniform(-2.5, 2.5)};
    const auto r = step_quasistatic(scene, s, u, 0.1, params);
    if (!r.ok()) continue;  // rejected steps leave the state unchanged
    s = r.state;
    EXPECT_LE(max_scene_penetration(scene, s), 1e-4);
  }
}

TEST(StepQuasistatic, PushIntoObstacleRejects) {
  Scene scene = make_layout(2);
  // Target directly below the obstacle, robot below the target, pushing up.
  scene.object_starts[0] = make_pose(0.0, 0.01, 0.0);
  scene.robot_start = make_pose(0.0, -0.071, 0.0);
  const PhysicsParams params = nominal_params(scene);
  const WorldState s = initial_state(scene);
  const auto r = step_quasistatic(scene, s, Twist2{0.0, 0.25, 0.0}, 1.0, params);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.error, StepError::penetration_unresolved);
}

TEST(StepWeld, NoContactZeroCommandUnchanged) {
  const Scene scene = make_reduced_layout();
  const PhysicsParams params = nominal_params(scene);
  const WorldState s = initial_state(scene);
  const auto r = step_weld(scene, s, Twist2{}, 0.1, params);
  ASSERT_TRUE(r.ok());
  EXPECT_FALSE(r.state.weld_rel.has_value());
  EXPECT_DOUBLE_EQ(r.state.object_poses[0].x, s.object_poses[0].x);
}

TEST(StepWeld, TargetStationaryUntilContactThenRigid) {
  const Scene scene = single_cube_scene();
  const PhysicsParams params = nominal_params(scene);
  WorldState s = initial_state(scene);
  s.robot_pose = make_pose(-0.20, 0.0, 0.0);  // 8 cm shy of touching

  auto r = step_weld(scene, s, Twist2{0.1, 0.0, 0.0}, 0.5, params);  // closes 5 cm
  ASSERT_TRUE(r.ok());
  EXPECT_FALSE(r.state.weld_rel.has_value());
  EXPECT_DOUBLE_EQ(r.state.object_poses[0].x, 0.0);  // untouched so unmoved

  r = step_weld(scene, r.state, Twist2{0.1, 0.0, 0.0}, 1.0, params);  // makes contact
  ASSERT_TRUE(r.ok());
  ASSERT_TRUE(r.state.weld_rel.has_value());

  // Rigid from here: robot translates 0.1, target translates exactly 0.1.
  const WorldState attached = r.state;
  r = step_weld(scene, attached, Twist2{0.1, 0.0, 0.0}, 1.0, params);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.state.object_poses[0].x - attached.object_poses[0].x, 0.1, 1e-12);
  EXPECT_NEAR(r.state.object_poses[0].y - attached.object_poses[0].y, 0.0, 1e-12);
}

TEST(StepWeld, RotationFollowsFrozenRelativePose) {
  const Scene scene = single_cube_scene();
  const PhysicsParams params = nominal_params(scene);
  WorldState s = initial_state(scene);
  auto r = step_weld(scene, s, Twist2{0.05, 0.0, 0.0}, 0.2, params);  // attach
  ASSERT_TRUE(r.ok());
  ASSERT_TRUE(r.state.weld_rel.has_value());
  const SE2Pose rel = *r.state.weld_rel;

  const auto r2 = step_weld(scene, r.state, Twist2{0.0, 0.0, kPi / 4.0}, 1.0, params);
  ASSERT_TRUE(r2.ok());
  const SE2Pose expect = se2_compose(r2.state.robot_pose, rel);
  EXPECT_NEAR(r2.state.object_poses[0].x, expect.x, 1e-12);
  EXPECT_NEAR(r2.state.object_poses[0].y, expect.y, 1e-12);
  EXPECT_NEAR(angle_distance(r2.state.object_poses[0].theta, expect.theta), 0.0, 1e-12);

  // Relative pose drift over a random command sequence stays below 1e-9.
  Rng rng(5);
  WorldState cur = r2.state;
  for (int i = 0; i < 30; ++i) {
    const Twist2 u{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.5, 0.5)};
    const auto rr = step_weld(scene, cur, u, 0.1, params);
    if (!rr.ok()) continue;
    cur = rr.state;
    const SE2Pose now_rel = se2_compose(se2_inverse(cur.robot_pose), cur.object_poses[0]);
    EXPECT_NEAR(now_rel.x, rel.x, 1e-9);
    EXPECT_NEAR(now_rel.y, rel.y, 1e-9);
    EXPECT_NEAR(angle_distance(now_rel.theta, rel.theta), 0.0, 1e-9);
  }
}

TEST(StepDynamic, ZeroCommandAtRestUnchanged) {
  const Scene scene = make_layout(1);
  const PhysicsParams params = nominal_params(scene);
  const WorldState s = initial_state(scene);
  const auto r = step_dynamic(scene, s, Twist2{}, 0.1, params);
  ASSERT_TRUE(r.ok());
  for (int i = 0; i < scene.num_objects(); ++i) {
    EXPECT_DOUBLE_EQ(r.state.object_poses[i].x, s.object_poses[i].x);
    EXPECT_DOUBLE_EQ(r.state.object_poses[i].y, s.object_poses[i].y);
    EXPECT_DOUBLE_EQ(r.state.object_twists[i].vx, 0.0);
  }
}

TEST(StepDynamic, CoulombStoppingDistance) {
  Scene scene = make_reduced_layout();
  scene.object_starts = {make_pose(-0.3, 0.0, 0.0)};
  scene.robot_start = make_pose(-0.45, -0.4, 0.0);  // far away
  const PhysicsParams params = nominal_params(scene);

  double prev_distance = 0.0;
  for (const double v0 : {0.5, 1.0, 1.5}) {
    WorldState s = initial_state(scene);
    s.object_twists[0] = {v0, 0.0, 0.0};
    for (int k = 0; k < 200; ++k) {
      const auto r = step_dynamic(scene, s, Twist2{}, 0.1, params);
      s = r.state;
      if (s.object_twists[0].vx == 0.0) break;
    }
    const double travelled = s.object_poses[0].x - (-0.3);
    const double analytic = v0 * v0 / (2.0 * params.friction_table[0] * kGravity);
    EXPECT_NEAR(travelled, analytic, 0.05 * analytic) << "v0 = " << v0;
    EXPECT_GT(travelled, prev_distance);
    prev_distance = travelled;
  }
}

TEST(StepDynamic, ObjectCoastsAfterContactEndsUnlikeQuasistatic) {
  const Scene scene = single_cube_scene();
  const PhysicsParams params = nominal_params(scene);

  auto push_then_retreat = [&](ModelKind model) {
    WorldState s = initial_state(scene);
    for (int k = 0; k < 5; ++k) s = step_model(model, scene, s, Twist2{0.25, 0, 0}, 0.1, params).state;
    const double at_release = s.object_poses[0].x;
    for (int k = 0; k < 5; ++k) s = step_model(model, scene, s, Twist2{-0.25, 0, 0}, 0.1, params).state;
    return std::make_pair(at_release, s.object_poses[0].x);
  };

  const auto [dyn_release, dyn_final] = push_then_retreat(ModelKind::dynamic);
  EXPECT_GT(dyn_final, dyn_release + 1e-3);  // keeps moving forward

  const auto [qs_release, qs_final] = push_then_retreat(ModelKind::quasistatic);
  EXPECT_NEAR(qs_final, qs_release, 1e-9);  // stops the instant contact is lost
}

TEST(StepDynamic, KineticEnergyNonIncreasingWithZeroCommand) {
  Scene scene = make_layout(1);
  scene.robot_start = make_pose(-0.45, -0.45, 0.0);
  const PhysicsParams params = nominal_params(scene);
  auto ke = [&](const WorldState& s) {
    double e = 0.0;
    for (int i = 0; i < scene.num_objects(); ++i) {
      const auto& sh = scene.object_shapes[i];
      const double inertia = params.mass[i] * (sh.a * sh.a + sh.b * sh.b) / 3.0;
      const auto& t = s.object_twists[i];
      e += 0.5 * params.mass[i] * (t.vx * t.vx + t.vy * t.vy) + 0.5 * inertia * t.omega * t.omega;
    }
    return e;
  };
  WorldState s = initial_state(scene);
  // Aim objects at each other so they collide while coasting.
  s.object_poses = {make_pose(-0.1, 0.0, 0.0), make_pose(0.1, 0.02, 0.3), make_pose(0.0, 0.2, 0.0)};
  s.object_twists = {{0.8, 0.0, 1.0}, {-0.8, 0.0, -2.0}, {0.0, -0.5, 0.5}};
  double prev = ke(s);
  for (int k = 0; k < 30; ++k) {
    s = step_dynamic(scene, s, Twist2{}, 0.1, params).state;
    const double now = ke(s);
    EXPECT_LE(now, prev + 1e-12);
    prev = now;
  }
  EXPECT_LT(prev, 1e-9);  // everything at rest well before 3 s
}

TEST(Models, AgreeOnFreeMotion) {
  Scene scene = make_layout(1);
  const PhysicsParams params = nominal_params(scene);
  WorldState s = initial_state(scene);
  s.robot_pose = make_pose(-0.3, -0.4, 0.4);  // clear of everything
  Rng rng(13);
  for (int k = 0; k < 50; ++k) {
    const Twist2 u{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-1.0, 1.0)};
    const auto a = step_dynamic(scene, s, u, 0.1, params);
    const auto b = step_quasistatic(scene, s, u, 0.1, params);
    const auto c = step_weld(scene, s, u, 0.1, params);
    ASSERT_TRUE(a.ok() && b.ok() && c.ok());
    EXPECT_NEAR(a.state.robot_pose.x, s.robot_pose.x + u.vx * 0.1, 1e-12);
    EXPECT_NEAR(a.state.robot_pose.y, s.robot_pose.y + u.vy * 0.1, 1e-12);
    for (const auto* r : {&a, &b, &c}) {
      EXPECT_NEAR(r->state.robot_pose.x, a.state.robot_pose.x, 1e-12);
      EXPECT_NEAR(r->state.robot_pose.y, a.state.robot_pose.y, 1e-12);
      EXPECT_NEAR(angle_distance(r->state.robot_pose.theta, a.state.robot_pose.theta), 0.0, 1e-12);
    }
  }
}

TEST(SampleParams, ZeroVarianceReturnsNominal) {
  const Scene scene = make_layout(1);
  const PhysicsParams nominal = nominal_params(scene);
  Rng rng(1);
  const PhysicsParams p = sample_params(nominal, rng, 0.0);
  EXPECT_EQ(p.mass, nominal.mass);
  EXPECT_EQ(p.friction_table, nominal.friction_table);
  EXPECT_DOUBLE_EQ(p.pressure_moment_const, nominal.pressure_moment_const);
}

TEST(SampleParams, AllDrawsStrictlyPositive) {
  const Scene scene = make_layout(1);
  const PhysicsParams nominal = nominal_params(scene);
  Rng rng(2);
  for (int i = 0; i < 100000 / 9; ++i) {  // 9 scalars per draw
    const PhysicsParams p = sample_params(nominal, rng);
    EXPECT_TRUE(p.valid());
  }
}

// Mean of the positive-truncated Normal(1, 2), by Simpson quadrature.
double truncated_normal_mean() {
  const double mu = 1.0, sigma = 2.0;
  auto phi = [&](double x) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z);
  };
  const int n = 200000;
  const double hi = mu + 8.0 * sigma;
  double num = 0.0, den = 0.0;
  const double h = hi / n;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    num += w * x * phi(x);
    den += w * phi(x);
  }
  return num / den;
}

TEST(SampleParams, MassMatchesTruncatedNormalMoment) {
  Scene scene = make_reduced_layout();
  PhysicsParams nominal = nominal_params(scene);
  nominal.mass = {1.0};
  Rng rng(77);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const PhysicsParams p = sample_params(nominal, rng);
    sum += p.mass[0];
    sumsq += p.mass[0] * p.mass[0];
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sumsq / n - mean * mean);
  const double want = truncated_normal_mean();
  EXPECT_NEAR(mean, want, 3.0 * sd / std::sqrt(double(n)));
}

}  // namespace
}  // namespace pushrl
