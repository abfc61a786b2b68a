#include "pushrl/geometry.hpp"

#include <gtest/gtest.h>

#include "pushrl/rng.hpp"

namespace pushrl {
namespace {

Eigen::Matrix3d homogeneous(const SE2Pose& p) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = std::cos(p.theta);
  m(0, 1) = -std::sin(p.theta);
  m(1, 0) = std::sin(p.theta);
  m(1, 1) = std::cos(p.theta);
  m(0, 2) = p.x;
  m(1, 2) = p.y;
  return m;
}

SE2Pose random_pose(Rng& rng) {
  return make_pose(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                   rng.uniform(-3.2, 3.2));
}

TEST(NormalizeAngle, RangeAndIdentities) {
  EXPECT_DOUBLE_EQ(normalize_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(3.0 * kPi), kPi);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double n = normalize_angle(a);
    EXPECT_GT(n, -kPi);
    EXPECT_LE(n, kPi);
    EXPECT_NEAR(std::cos(n), std::cos(a), 1e-9);
    EXPECT_NEAR(std::sin(n), std::sin(a), 1e-9);
  }
}

TEST(Se2Compose, IdentityAndRotation) {
  const SE2Pose p = make_pose(1.0, 2.0, 0.5);
  const SE2Pose r = se2_compose(SE2Pose{}, p);
  EXPECT_DOUBLE_EQ(r.x, 1.0);
  EXPECT_DOUBLE_EQ(r.y, 2.0);
  EXPECT_DOUBLE_EQ(r.theta, 0.5);

  const SE2Pose q = se2_compose(make_pose(0, 0, kPi / 2), make_pose(0, 0, kPi / 2));
  EXPECT_NEAR(q.x, 0.0, 1e-15);
  EXPECT_NEAR(q.y, 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(q.theta, kPi);
}

TEST(Se2Compose, MatchesMatrixOracle) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const SE2Pose a = random_pose(rng), b = random_pose(rng);
    const SE2Pose c = se2_compose(a, b);
    const Eigen::Matrix3d m = homogeneous(a) * homogeneous(b);
    EXPECT_NEAR(c.x, m(0, 2), 1e-9);
    EXPECT_NEAR(c.y, m(1, 2), 1e-9);
    EXPECT_NEAR(std::cos(c.theta), m(0, 0), 1e-9);
    EXPECT_NEAR(std::sin(c.theta), m(1, 0), 1e-9);
  }
}

TEST(Se2Inverse, Trivials) {
  const SE2Pose id = se2_inverse(SE2Pose{});
  EXPECT_DOUBLE_EQ(id.x, 0.0);
  EXPECT_DOUBLE_EQ(id.y, 0.0);
  EXPECT_DOUBLE_EQ(id.theta, 0.0);

  const SE2Pose t = se2_inverse(make_pose(1.0, 0.0, 0.0));
  EXPECT_DOUBLE_EQ(t.x, -1.0);
  EXPECT_DOUBLE_EQ(t.y, 0.0);
}

TEST(Se2Inverse, RoundTripMatchesMatrixOracle) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const SE2Pose a = random_pose(rng);
    const SE2Pose inv = se2_inverse(a);
    const Eigen::Matrix3d m = homogeneous(a).inverse();
    EXPECT_NEAR(inv.x, m(0, 2), 1e-9);
    EXPECT_NEAR(inv.y, m(1, 2), 1e-9);

    const SE2Pose round = se2_compose(a, inv);
    EXPECT_NEAR(round.x, 0.0, 1e-9);
    EXPECT_NEAR(round.y, 0.0, 1e-9);
    EXPECT_NEAR(angle_distance(round.theta, 0.0), 0.0, 1e-9);
  }
}

TEST(ConvexShape, RejectsNonPositiveExtents) {
  EXPECT_THROW(ConvexShape::box(0.0, 0.1, EntityClass::movable), std::invalid_argument);
  EXPECT_THROW(ConvexShape::box(0.1, -0.1, EntityClass::movable), std::invalid_argument);
  EXPECT_THROW(ConvexShape::disc(0.0, EntityClass::robot), std::invalid_argument);
}

TEST(ContactQuery, FarSeparation) {
  const auto box = ConvexShape::box(0.5, 0.5, EntityClass::movable);
  const auto m = contact_query(box, make_pose(0, 0, 0), box, make_pose(10, 0, 0));
  EXPECT_FALSE(m.has_value());
}

TEST(ContactQuery, ExactFaceTouch) {
  const auto box = ConvexShape::box(0.04, 0.04, EntityClass::movable);
  const auto m = contact_query(box, make_pose(0, 0, 0), box, make_pose(0.08, 0, 0));
  ASSERT_TRUE(m.has_value());
  ASSERT_GE(m->points.size(), 1u);
  for (const auto& p : m->points) {
    EXPECT_NEAR(p.penetration, 0.0, 1e-12);
    EXPECT_NEAR(p.normal.x(), 1.0, 1e-12);
    EXPECT_NEAR(p.normal.y(), 0.0, 1e-12);
  }
}

TEST(ContactQuery, ManifoldInvariants) {
  Rng rng(23);
  for (int i = 0; i < 2000; ++i) {
    const auto sa = rng.bernoulli(0.7) ? ConvexShape::box(rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.2), EntityClass::movable)
                                       : ConvexShape::disc(rng.uniform(0.02, 0.2), EntityClass::movable);
    const auto sb = rng.bernoulli(0.7) ? ConvexShape::box(rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.2), EntityClass::movable)
                                       : ConvexShape::disc(rng.uniform(0.02, 0.2), EntityClass::movable);
    const SE2Pose pa = make_pose(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-3.2, 3.2));
    const SE2Pose pb = make_pose(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-3.2, 3.2));
    const auto m = contact_query(sa, pa, sb, pb, 3, 9);
    if (!m) continue;
    EXPECT_EQ(m->pair.first, 3);
    EXPECT_EQ(m->pair.second, 9);
    ASSERT_GE(m->points.size(), 1u);
    for (const auto& p : m->points) {
      EXPECT_NEAR(p.normal.norm(), 1.0, 1e-9);
      EXPECT_GE(p.penetration, 0.0);
    }
  }
}

// Dense point-sampling overlap oracle: sample points inside shape a, report
// overlap when any lands inside shape b as well.
bool overlap_oracle(const ConvexShape& sa, const SE2Pose& pa, const ConvexShape& sb,
                    const SE2Pose& pb, int samples, Rng& rng) {
  for (int i = 0; i < samples; ++i) {
    Vec2 local;
    if (sa.kind == ConvexShape::Kind::box) {
      local = {rng.uniform(-sa.a, sa.a), rng.uniform(-sa.b, sa.b)};
    } else {
      const double r = sa.a * std::sqrt(rng.uniform());
      const double th = rng.uniform(0.0, 2.0 * kPi);
      local = {r * std::cos(th), r * std::sin(th)};
    }
    if (point_in_shape(sb, pb, se2_apply(pa, local))) return true;
  }
  return false;
}

TEST(ContactQuery, AgreesWithMonteCarloOracle) {
  Rng rng(101);
  int agree = 0, total = 0;
  for (int i = 0; i < 400; ++i) {
    const auto sa = rng.bernoulli(0.5) ? ConvexShape::box(rng.uniform(0.03, 0.15), rng.uniform(0.03, 0.15), EntityClass::movable)
                                       : ConvexShape::disc(rng.uniform(0.03, 0.15), EntityClass::movable);
    const auto sb = rng.bernoulli(0.5) ? ConvexShape::box(rng.uniform(0.03, 0.15), rng.uniform(0.03, 0.15), EntityClass::movable)
                                       : ConvexShape::disc(rng.uniform(0.03, 0.15), EntityClass::movable);
    const SE2Pose pa = make_pose(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-3.2, 3.2));
    const SE2Pose pb = make_pose(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-3.2, 3.2));
    const bool fast = contact_query(sa, pa, sb, pb).has_value();
    const bool slow = overlap_oracle(sa, pa, sb, pb, 100000, rng);
    total += 1;
    // The sampling oracle can only under-report overlap (it never finds a
    // false intersection), so disagreement is expected solely on grazing
    // contacts.
    agree += (fast == slow) ? 1 : 0;
  }
  EXPECT_GE(double(agree) / double(total), 0.999);
}

TEST(ContactQuery, BooleanSymmetry) {
  Rng rng(55);
  for (int i = 0; i < 2000; ++i) {
    const auto sa = ConvexShape::box(rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.2), EntityClass::movable);
    const auto sb = rng.bernoulli(0.5) ? ConvexShape::box(rng.uniform(0.02, 0.2), rng.uniform(0.02, 0.2), EntityClass::movable)
                                       : ConvexShape::disc(rng.uniform(0.02, 0.2), EntityClass::movable);
    const SE2Pose pa = make_pose(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-3.2, 3.2));
    const SE2Pose pb = make_pose(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-3.2, 3.2));
    EXPECT_EQ(contact_query(sa, pa, sb, pb).has_value(),
              contact_query(sb, pb, sa, pa).has_value());
  }
}

TEST(CStateDistance, Trivials) {
  const std::vector<SE2Pose> q = {make_pose(0.1, 0.2, 0.3), make_pose(-1, 0, 2)};
  const std::vector<double> w = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(cstate_distance(q, q, w), 0.0);

  const std::vector<SE2Pose> a = {make_pose(0, 0, 0)};
  const std::vector<SE2Pose> b = {make_pose(1, 0, 0)};
  const std::vector<double> w1 = {1.0};
  EXPECT_DOUBLE_EQ(cstate_distance(a, b, w1), 1.0);
}

TEST(CStateDistance, LengthMismatchThrows) {
  const std::vector<SE2Pose> a = {make_pose(0, 0, 0)};
  const std::vector<SE2Pose> b = {make_pose(1, 0, 0), make_pose(0, 0, 0)};
  const std::vector<double> w = {1.0};
  EXPECT_THROW(cstate_distance(a, b, w), std::invalid_argument);
}

TEST(CStateDistance, PseudometricProperties) {
  Rng rng(31);
  const std::vector<double> w = {1.0, 0.5, 0.25};
  auto rand_state = [&] {
    std::vector<SE2Pose> q;
    for (int i = 0; i < 3; ++i) q.push_back(random_pose(rng));
    return q;
  };
  for (int i = 0; i < 1000; ++i) {
    const auto a = rand_state(), b = rand_state(), c = rand_state();
    const double ab = cstate_distance(a, b, w);
    const double ba = cstate_distance(b, a, w);
    const double ac = cstate_distance(a, c, w);
    const double cb = cstate_distance(c, b, w);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_LE(ab, ac + cb + 1e-12);
  }
}

}  // namespace
}  // namespace pushrl
