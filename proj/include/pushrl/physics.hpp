#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "pushrl/geometry.hpp"
#include "pushrl/rng.hpp"
#include "pushrl/scene.hpp"

namespace pushrl {

inline constexpr double kGravity = 9.81;

enum class ModelKind { dynamic, quasistatic, weld };

inline std::string model_name(ModelKind m) {
  switch (m) {
    case ModelKind::dynamic: return "dynamic";
    case ModelKind::quasistatic: return "quasistatic";
    case ModelKind::weld: return "weld";
  }
  return "?";
}

inline ModelKind model_from_name(const std::string& s) {
  if (s == "dynamic") return ModelKind::dynamic;
  if (s == "quasistatic") return ModelKind::quasistatic;
  if (s == "weld") return ModelKind::weld;
  throw std::invalid_argument("unknown physics model '" + s + "'");
}

struct WorldState {
  SE2Pose robot_pose;
  std::vector<SE2Pose> object_poses;
  Twist2 robot_twist;
  std::vector<Twist2> object_twists;
  // Target pose in the robot frame, frozen at first contact (Weld model only).
  std::optional<SE2Pose> weld_rel;
};

inline WorldState initial_state(const Scene& scene) {
  WorldState s;
  s.robot_pose = scene.robot_start;
  s.object_poses = scene.object_starts;
  s.object_twists.assign(scene.num_objects(), Twist2{});
  return s;
}

struct PhysicsParams {
  std::vector<double> mass;            // kg, per movable object
  std::vector<double> friction_table;  // per movable object
  double friction_robot_object = 0.5;
  double friction_object_object = 0.5;
  double friction_object_obstacle = 0.5;
  double pressure_moment_const = 0.024;  // limit-surface torsional arm c [m]

  bool valid() const {
    auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    for (double m : mass)
      if (!pos(m)) return false;
    for (double f : friction_table)
      if (!pos(f)) return false;
    return pos(friction_robot_object) && pos(friction_object_object) &&
           pos(friction_object_obstacle) && pos(pressure_moment_const);
  }
};

// Nominal values: 0.1 kg cubes, friction 0.5 everywhere, torsional arm
// 0.6 x half width of the cube.
inline PhysicsParams nominal_params(const Scene& scene) {
  PhysicsParams p;
  p.mass.assign(scene.num_objects(), 0.1);
  p.friction_table.assign(scene.num_objects(), 0.5);
  const double hw = scene.num_objects() > 0 ? scene.object_shapes[0].a : 0.04;
  p.pressure_moment_const = 0.6 * hw;
  return p;
}

// Per-episode domain randomization: each parameter is drawn from
// Normal(nominal, scale * nominal) and redrawn while nonpositive. The draw
// loop is capped; after that the nominal value is used.
inline PhysicsParams sample_params(const PhysicsParams& nominal, Rng& rng, double scale = 2.0) {
  auto draw = [&](double nom) {
    if (scale == 0.0) return nom;
    for (int tries = 0; tries < 1000; ++tries) {
      const double v = rng.normal(nom, scale * nom);
      if (v > 0.0) return v;
    }
    return nom;
  };
  PhysicsParams out = nominal;
  for (auto& m : out.mass) m = draw(m);
  for (auto& f : out.friction_table) f = draw(f);
  out.friction_robot_object = draw(nominal.friction_robot_object);
  out.friction_object_object = draw(nominal.friction_object_object);
  out.friction_object_obstacle = draw(nominal.friction_object_obstacle);
  out.pressure_moment_const = draw(nominal.pressure_moment_const);
  return out;
}

// ---------------------------------------------------------------------------
// Limit surface

struct LimitSurface {
  double f_max = 1.0;  // tangential force saturation, mu * N
  double m_max = 1.0;  // moment saturation, c * f_max
};

inline LimitSurface make_limit_surface(double mu_table, double mass, double torsional_arm) {
  const double f = mu_table * mass * kGravity;
  return {f, torsional_arm * f};
}

// Twist direction of a quasi-statically pushed object: the outward normal of
// the limit-surface ellipsoid at the applied wrench, returned as a unit
// vector under the scaled norm ||(vx, vy, omega * c)|| with c = m_max/f_max.
inline Twist2 limit_surface_velocity(const LimitSurface& ls, double fx, double fy, double m) {
  const double gx = 2.0 * fx / (ls.f_max * ls.f_max);
  const double gy = 2.0 * fy / (ls.f_max * ls.f_max);
  const double gw = 2.0 * m / (ls.m_max * ls.m_max);
  const double c = ls.m_max / ls.f_max;
  const double norm = std::sqrt(gx * gx + gy * gy + gw * c * gw * c);
  if (norm < 1e-300)
    throw std::invalid_argument("limit_surface_velocity: zero wrench has no motion direction");
  return {gx / norm, gy / norm, gw / norm};
}

// ---------------------------------------------------------------------------
// Stepping

enum class StepError { none, penetration_unresolved, propagation_cycle };

struct StepResult {
  WorldState state;
  StepError error = StepError::none;
  bool ok() const { return error == StepError::none; }
};

namespace detail {

struct Entity {
  int id;  // 0 robot, 1..m objects, m+1.. obstacles
  const ConvexShape* shape;
  const SE2Pose* pose;
};

inline std::vector<Entity> entities(const Scene& scene, const WorldState& s) {
  std::vector<Entity> out;
  out.push_back({0, &scene.robot_shape, &s.robot_pose});
  for (int i = 0; i < scene.num_objects(); ++i)
    out.push_back({1 + i, &scene.object_shapes[i], &s.object_poses[i]});
  for (int i = 0; i < scene.num_obstacles(); ++i)
    out.push_back({1 + scene.num_objects() + i, &scene.obstacle_shapes[i], &scene.obstacle_poses[i]});
  return out;
}

// Quasi-static single-contact push. The pusher moves the contact point at
// velocity vp; the object responds along the limit-surface normal of a
// contact force inside the friction cone. Sticking when the force that
// makes the contact point track vp lies inside the cone, otherwise sliding
// along the nearer cone edge with matched normal approach speed.
//
// For an ellipsoidal limit surface the contact-point velocity is the SPD
// map u_c(f) = (I + q q^T / c^2) f with q = perp(p - center), which makes
// the sticking force direction solvable in closed form.
inline std::optional<Twist2> solve_push(const Vec2& center, const Vec2& contact, const Vec2& n,
                                        const Vec2& vp, double mu, double torsional_arm) {
  const double approach = vp.dot(n);
  if (approach <= 1e-12) return std::nullopt;  // receding or tangent

  const double c2 = torsional_arm * torsional_arm;
  const Vec2 p_rel = contact - center;
  const Vec2 q(-p_rel.y(), p_rel.x());
  Eigen::Matrix2d M = Eigen::Matrix2d::Identity() + q * q.transpose() / c2;

  const double cone = std::atan(mu);
  const Vec2 t(-n.y(), n.x());

  Vec2 f_dir = M.inverse() * vp;
  double phi = std::atan2(f_dir.dot(t), f_dir.dot(n));
  bool sticking = f_dir.dot(n) > 0.0 && std::abs(phi) <= cone;
  if (!sticking) phi = std::clamp(phi, -cone, cone);

  const Vec2 f = n * std::cos(phi) + t * std::sin(phi);
  const Vec2 u_c = M * f;
  double s;
  if (sticking) {
    s = vp.norm() / u_c.norm();
  } else {
    const double un = u_c.dot(n);
    if (un <= 1e-12) return std::nullopt;  // degenerate edge, no forward motion
    s = approach / un;
  }
  const double omega = q.dot(f) / c2;  // cross(p_rel, f) / c^2
  return Twist2{s * f.x(), s * f.y(), s * omega};
}

struct PenInfo {
  double pen = 0.0;
  Vec2 normal = Vec2::UnitX();  // from a to b
  int a = -1, b = -1;
};

// Deepest penetration over all pairs, optionally ignoring the welded
// robot-target pair.
inline PenInfo worst_penetration(const Scene& scene, const WorldState& s, bool skip_weld_pair) {
  const auto ents = entities(scene, s);
  const int m = scene.num_objects();
  PenInfo worst;
  for (size_t i = 0; i < ents.size(); ++i) {
    for (size_t j = i + 1; j < ents.size(); ++j) {
      const bool a_obj = ents[i].id >= 1 && ents[i].id <= m;
      const bool b_obj = ents[j].id >= 1 && ents[j].id <= m;
      if (!a_obj && !b_obj) continue;  // static pairs and robot-obstacle handled elsewhere
      if (skip_weld_pair && s.weld_rel &&
          ((ents[i].id == 0 && ents[j].id == 1 + scene.target_index) ||
           (ents[j].id == 0 && ents[i].id == 1 + scene.target_index)))
        continue;
      const auto man = contact_query(*ents[i].shape, *ents[i].pose, *ents[j].shape,
                                     *ents[j].pose, ents[i].id, ents[j].id);
      if (!man) continue;
      const double pen = man->max_penetration();
      if (pen > worst.pen) {
        worst.pen = pen;
        worst.normal = man->points[0].normal;
        worst.a = ents[i].id;
        worst.b = ents[j].id;
      }
    }
  }
  return worst;
}

}  // namespace detail

inline double max_scene_penetration(const Scene& scene, const WorldState& s,
                                    bool skip_weld_pair = false) {
  return detail::worst_penetration(scene, s, skip_weld_pair).pen;
}

// C_free membership: contact allowed, penetration beyond tolerance is not.
inline bool state_collision_free(const Scene& scene, const WorldState& s, double tol = 1e-6) {
  return max_scene_penetration(scene, s, s.weld_rel.has_value()) <= tol;
}

inline bool shape_in_table(const ConvexShape& sh, const SE2Pose& p, double half_extent) {
  if (sh.kind == ConvexShape::Kind::disc)
    return std::abs(p.x) + sh.a <= half_extent && std::abs(p.y) + sh.a <= half_extent;
  const auto f = detail::obb_frame(sh, p);
  for (const Vec2& c : detail::obb_corners(f))
    if (std::abs(c.x()) > half_extent || std::abs(c.y()) > half_extent) return false;
  return true;
}

inline bool state_in_bounds(const Scene& scene, const WorldState& s) {
  if (!shape_in_table(scene.robot_shape, s.robot_pose, scene.table_half_extent)) return false;
  for (int i = 0; i < scene.num_objects(); ++i)
    if (!shape_in_table(scene.object_shapes[i], s.object_poses[i], scene.table_half_extent))
      return false;
  return true;
}

namespace detail {

inline bool twist_is_zero(const Twist2& u) {
  return u.vx == 0.0 && u.vy == 0.0 && u.omega == 0.0;
}

// Moves movable objects out of penetration; the robot and obstacles do not
// move. Returns false if the residual penetration stays above `reject_tol`.
inline bool project_positions(const Scene& scene, WorldState& s, bool skip_weld_pair,
                              double reject_tol, int max_iters = 40) {
  const int m = scene.num_objects();
  const int target_id = 1 + scene.target_index;
  for (int iter = 0; iter < max_iters; ++iter) {
    const auto worst = worst_penetration(scene, s, skip_weld_pair);
    if (worst.pen <= 1e-9) return true;
    const bool a_obj = worst.a >= 1 && worst.a <= m;
    const bool b_obj = worst.b >= 1 && worst.b <= m;
    const bool a_fixed = !a_obj || (skip_weld_pair && s.weld_rel && worst.a == target_id);
    const bool b_fixed = !b_obj || (skip_weld_pair && s.weld_rel && worst.b == target_id);
    const double push = worst.pen + 1e-10;
    if (a_fixed && b_fixed) return worst.pen <= reject_tol;
    if (a_fixed) {
      auto& p = s.object_poses[worst.b - 1];
      p = make_pose(p.x + worst.normal.x() * push, p.y + worst.normal.y() * push, p.theta);
    } else if (b_fixed) {
      auto& p = s.object_poses[worst.a - 1];
      p = make_pose(p.x - worst.normal.x() * push, p.y - worst.normal.y() * push, p.theta);
    } else {
      auto& pa = s.object_poses[worst.a - 1];
      auto& pb = s.object_poses[worst.b - 1];
      pa = make_pose(pa.x - worst.normal.x() * push * 0.5, pa.y - worst.normal.y() * push * 0.5,
                     pa.theta);
      pb = make_pose(pb.x + worst.normal.x() * push * 0.5, pb.y + worst.normal.y() * push * 0.5,
                     pb.theta);
    }
  }
  return worst_penetration(scene, s, skip_weld_pair).pen <= reject_tol;
}

// Robot against obstacles: the robot is velocity-commanded and cannot be
// displaced, so any penetration beyond tolerance is a hard failure of the
// commanded motion.
inline bool robot_clear_of_obstacles(const Scene& scene, const WorldState& s, double tol) {
  for (int i = 0; i < scene.num_obstacles(); ++i) {
    const auto man = contact_query(scene.robot_shape, s.robot_pose, scene.obstacle_shapes[i],
                                   scene.obstacle_poses[i]);
    if (man && man->max_penetration() > tol) return false;
  }
  return true;
}

struct PushFrontier {
  int entity_id;  // 0 robot, 1..m objects
  Twist2 twist;
  Vec2 origin;  // point the twist is expressed about
};

// One quasi-static substep: move the robot, propagate pushes breadth-first
// (each object moves at most once per substep), then resolve residual
// penetration. `weld_target` freezes the target to the robot.
inline StepError quasistatic_substep(const Scene& scene, WorldState& s, const Twist2& u,
                                     double h, const PhysicsParams& params, bool weld_target) {
  const int m = scene.num_objects();
  const int target = scene.target_index;

  s.robot_pose = integrate_twist(s.robot_pose, u, h);

  if (weld_target && !s.weld_rel) {
    // Attach on first touch; resolve any overlap first so the frozen
    // relative pose is contact-accurate. The probe shape is inflated by a
    // hair so a trajectory replayed from an exactly-touching state
    // re-attaches deterministically.
    ConvexShape probe = scene.object_shapes[target];
    probe.a += 1e-9;
    if (probe.kind == ConvexShape::Kind::box) probe.b += 1e-9;
    const auto man = contact_query(scene.robot_shape, s.robot_pose, probe,
                                   s.object_poses[target]);
    if (man) {
      const double pen = man->max_penetration() - 1e-9;
      if (pen > 0.0) {
        const Vec2 n = man->points[0].normal;
        auto& p = s.object_poses[target];
        p = make_pose(p.x + n.x() * pen, p.y + n.y() * pen, p.theta);
      }
      s.weld_rel = se2_compose(se2_inverse(s.robot_pose), s.object_poses[target]);
    }
  }
  if (weld_target && s.weld_rel) {
    s.object_poses[target] = se2_compose(s.robot_pose, *s.weld_rel);
  }

  std::vector<bool> moved(m, false);
  if (weld_target) moved[target] = true;  // welded or waiting; never pushed
  std::vector<PushFrontier> frontier;
  frontier.push_back({0, u, Vec2(s.robot_pose.x, s.robot_pose.y)});
  if (weld_target && s.weld_rel) {
    const Vec2 tc(s.object_poses[target].x, s.object_poses[target].y);
    const Vec2 v = point_velocity(u, Vec2(s.robot_pose.x, s.robot_pose.y), tc);
    frontier.push_back({1 + target, Twist2{v.x(), v.y(), u.omega}, tc});
  }

  for (size_t qi = 0; qi < frontier.size(); ++qi) {
    const PushFrontier pusher = frontier[qi];
    if (qi > size_t(m) + 2) return StepError::propagation_cycle;
    const ConvexShape& pusher_shape =
        pusher.entity_id == 0 ? scene.robot_shape : scene.object_shapes[pusher.entity_id - 1];
    const SE2Pose& pusher_pose =
        pusher.entity_id == 0 ? s.robot_pose : s.object_poses[pusher.entity_id - 1];
    for (int o = 0; o < m; ++o) {
      if (moved[o] || 1 + o == pusher.entity_id) continue;
      const auto man = contact_query(pusher_shape, pusher_pose, scene.object_shapes[o],
                                     s.object_poses[o]);
      if (!man) continue;
      const Vec2 contact = man->centroid();
      const Vec2 n = man->points[0].normal;
      const Vec2 vp = point_velocity(pusher.twist, pusher.origin, contact);
      const double mu =
          pusher.entity_id == 0 ? params.friction_robot_object : params.friction_object_object;
      const Vec2 center(s.object_poses[o].x, s.object_poses[o].y);
      const auto tw = solve_push(center, contact, n, vp, mu, params.pressure_moment_const);
      if (!tw) continue;
      s.object_poses[o] = integrate_twist(s.object_poses[o], *tw, h);
      moved[o] = true;
      frontier.push_back({1 + o, *tw, Vec2(s.object_poses[o].x, s.object_poses[o].y)});
    }
  }

  if (!robot_clear_of_obstacles(scene, s, 1e-6)) return StepError::penetration_unresolved;
  if (!project_positions(scene, s, weld_target && s.weld_rel.has_value(), 1e-6))
    return StepError::penetration_unresolved;
  // Projection may have dragged the welded target; re-pin it.
  if (weld_target && s.weld_rel) s.object_poses[target] = se2_compose(s.robot_pose, *s.weld_rel);
  return StepError::none;
}

inline StepResult step_pushing(const Scene& scene, const WorldState& in, const Twist2& u,
                               double dt, const PhysicsParams& params, bool weld_target) {
  if (dt <= 0.0) throw std::invalid_argument("step: dt must be positive");
  StepResult out{in, StepError::none};
  out.state.object_twists.assign(scene.num_objects(), Twist2{});
  out.state.robot_twist = u;
  if (twist_is_zero(u)) return out;  // objects move only while pushed

  const int n_sub = std::max(1, int(std::ceil(dt / 0.01 - 1e-12)));
  const double h = dt / n_sub;
  for (int k = 0; k < n_sub; ++k) {
    const StepError err = quasistatic_substep(scene, out.state, u, h, params, weld_target);
    if (err != StepError::none) return {in, err};
  }
  return out;
}

}  // namespace detail

// Quasi-static model: objects move only while pushed and come to rest the
// instant contact is lost; twists in the returned state are zero.
inline StepResult step_quasistatic(const Scene& scene, const WorldState& in, const Twist2& u,
                                   double dt, const PhysicsParams& params) {
  WorldState clean = in;
  clean.weld_rel.reset();
  return detail::step_pushing(scene, clean, u, dt, params, false);
}

// Weld model: the target is stationary until first robot contact and rigidly
// attached afterwards; other movables behave quasi-statically.
inline StepResult step_weld(const Scene& scene, const WorldState& in, const Twist2& u, double dt,
                            const PhysicsParams& params) {
  return detail::step_pushing(scene, in, u, dt, params, true);
}

// ---------------------------------------------------------------------------
// Dynamic model: semi-implicit integration with sequential impulses,
// Coulomb contact friction, table friction, and positional projection.
// Never rejects; the learning environment must survive any command.

namespace detail {

struct Body {
  Vec2 vel;
  double omega;
  double inv_mass;
  double inv_inertia;
  Vec2 center;
};

inline void apply_impulse(Body& b, const Vec2& impulse, const Vec2& at) {
  b.vel += impulse * b.inv_mass;
  b.omega += cross2(at - b.center, impulse) * b.inv_inertia;
}

inline Vec2 velocity_at(const Body& b, const Vec2& at) {
  const Vec2 r = at - b.center;
  return b.vel + b.omega * Vec2(-r.y(), r.x());
}

}  // namespace detail

inline StepResult step_dynamic(const Scene& scene, const WorldState& in, const Twist2& u,
                               double dt, const PhysicsParams& params) {
  if (dt <= 0.0) throw std::invalid_argument("step: dt must be positive");
  const int m = scene.num_objects();
  const double h = 0.005;
  const int n_sub = std::max(1, int(std::round(dt / h)));
  const double hh = dt / n_sub;

  StepResult out{in, StepError::none};
  WorldState& s = out.state;
  s.weld_rel.reset();
  s.robot_twist = u;
  if (int(s.object_twists.size()) != m) s.object_twists.assign(m, Twist2{});

  auto inertia = [&](int i) {
    const ConvexShape& sh = scene.object_shapes[i];
    if (sh.kind == ConvexShape::Kind::disc) return 0.5 * params.mass[i] * sh.a * sh.a;
    return params.mass[i] * (sh.a * sh.a + sh.b * sh.b) / 3.0;
  };

  for (int sub = 0; sub < n_sub; ++sub) {
    // Table friction decelerates free motion toward rest.
    for (int i = 0; i < m; ++i) {
      auto& tw = s.object_twists[i];
      Vec2 v(tw.vx, tw.vy);
      const double dv = params.friction_table[i] * kGravity * hh;
      const double speed = v.norm();
      v = speed <= dv ? Vec2::Zero() : Vec2(v - v * (dv / speed));
      const double torque = params.friction_table[i] * params.mass[i] * kGravity *
                            params.pressure_moment_const;
      const double dw = torque / inertia(i) * hh;
      double w = tw.omega;
      w = std::abs(w) <= dw ? 0.0 : w - dw * (w > 0 ? 1.0 : -1.0);
      tw = {v.x(), v.y(), w};
    }

    // Bodies: 0 robot (kinematic), 1..m objects, then obstacles (static).
    std::vector<detail::Body> bodies;
    bodies.push_back({Vec2(u.vx, u.vy), u.omega, 0.0, 0.0, Vec2(s.robot_pose.x, s.robot_pose.y)});
    for (int i = 0; i < m; ++i)
      bodies.push_back({Vec2(s.object_twists[i].vx, s.object_twists[i].vy),
                        s.object_twists[i].omega, 1.0 / params.mass[i], 1.0 / inertia(i),
                        Vec2(s.object_poses[i].x, s.object_poses[i].y)});
    for (int i = 0; i < scene.num_obstacles(); ++i)
      bodies.push_back({Vec2::Zero(), 0.0, 0.0, 0.0,
                        Vec2(scene.obstacle_poses[i].x, scene.obstacle_poses[i].y)});

    struct Contact {
      int a, b;
      Vec2 point, normal;
      double mu;
      double jn = 0.0, jt = 0.0;
    };
    std::vector<Contact> contacts;
    const auto ents = detail::entities(scene, s);
    for (size_t i = 0; i < ents.size(); ++i) {
      for (size_t j = i + 1; j < ents.size(); ++j) {
        const bool a_obj = ents[i].id >= 1 && ents[i].id <= m;
        const bool b_obj = ents[j].id >= 1 && ents[j].id <= m;
        if (!a_obj && !b_obj) continue;
        const auto man = contact_query(*ents[i].shape, *ents[i].pose, *ents[j].shape,
                                       *ents[j].pose, ents[i].id, ents[j].id);
        if (!man) continue;
        double mu = params.friction_object_object;
        if (ents[i].id == 0 || ents[j].id == 0) mu = params.friction_robot_object;
        if (!a_obj || !b_obj) mu = (ents[i].id == 0 || ents[j].id == 0)
                                       ? params.friction_robot_object
                                       : params.friction_object_obstacle;
        for (const auto& cp : man->points)
          contacts.push_back({ents[i].id, ents[j].id, cp.position, cp.normal, mu});
      }
    }

    // Sequential impulses, zero restitution.
    for (int iter = 0; iter < 10; ++iter) {
      for (auto& c : contacts) {
        detail::Body& A = bodies[c.a];
        detail::Body& B = bodies[c.b];
        const Vec2 rel = detail::velocity_at(B, c.point) - detail::velocity_at(A, c.point);
        const Vec2 ra = c.point - A.center, rb = c.point - B.center;
        const double kn = A.inv_mass + B.inv_mass +
                          cross2(ra, c.normal) * cross2(ra, c.normal) * A.inv_inertia +
                          cross2(rb, c.normal) * cross2(rb, c.normal) * B.inv_inertia;
        if (kn <= 0.0) continue;
        const double dn = -rel.dot(c.normal) / kn;
        const double jn0 = c.jn;
        c.jn = std::max(0.0, c.jn + dn);
        const double applied_n = c.jn - jn0;
        detail::apply_impulse(A, -applied_n * c.normal, c.point);
        detail::apply_impulse(B, applied_n * c.normal, c.point);

        const Vec2 t(-c.normal.y(), c.normal.x());
        const Vec2 rel2 = detail::velocity_at(B, c.point) - detail::velocity_at(A, c.point);
        const double kt = A.inv_mass + B.inv_mass +
                          cross2(ra, t) * cross2(ra, t) * A.inv_inertia +
                          cross2(rb, t) * cross2(rb, t) * B.inv_inertia;
        if (kt <= 0.0) continue;
        const double dtj = -rel2.dot(t) / kt;
        const double jt0 = c.jt;
        c.jt = std::clamp(c.jt + dtj, -c.mu * c.jn, c.mu * c.jn);
        const double applied_t = c.jt - jt0;
        detail::apply_impulse(A, -applied_t * t, c.point);
        detail::apply_impulse(B, applied_t * t, c.point);
      }
    }

    for (int i = 0; i < m; ++i)
      s.object_twists[i] = {bodies[1 + i].vel.x(), bodies[1 + i].vel.y(), bodies[1 + i].omega};

    s.robot_pose = integrate_twist(s.robot_pose, u, hh);
    for (int i = 0; i < m; ++i)
      s.object_poses[i] = integrate_twist(s.object_poses[i], s.object_twists[i], hh);

    // Positional correction, factor 0.2 per substep beyond a small slop;
    // velocities are untouched so the correction adds no kinetic energy.
    for (int iter = 0; iter < 8; ++iter) {
      const auto worst = detail::worst_penetration(scene, s, false);
      if (worst.pen <= 1e-5) break;
      const double push = 0.2 * worst.pen;
      const bool a_obj = worst.a >= 1 && worst.a <= m;
      const bool b_obj = worst.b >= 1 && worst.b <= m;
      if (a_obj && b_obj) {
        auto& pa = s.object_poses[worst.a - 1];
        auto& pb = s.object_poses[worst.b - 1];
        pa = make_pose(pa.x - worst.normal.x() * push * 0.5, pa.y - worst.normal.y() * push * 0.5, pa.theta);
        pb = make_pose(pb.x + worst.normal.x() * push * 0.5, pb.y + worst.normal.y() * push * 0.5, pb.theta);
      } else if (a_obj) {
        auto& pa = s.object_poses[worst.a - 1];
        pa = make_pose(pa.x - worst.normal.x() * push, pa.y - worst.normal.y() * push, pa.theta);
      } else if (b_obj) {
        auto& pb = s.object_poses[worst.b - 1];
        pb = make_pose(pb.x + worst.normal.x() * push, pb.y + worst.normal.y() * push, pb.theta);
      }
    }
  }
  return out;
}

inline StepResult step_model(ModelKind model, const Scene& scene, const WorldState& in,
                             const Twist2& u, double dt, const PhysicsParams& params) {
  switch (model) {
    case ModelKind::dynamic: return step_dynamic(scene, in, u, dt, params);
    case ModelKind::quasistatic: return step_quasistatic(scene, in, u, dt, params);
    case ModelKind::weld: return step_weld(scene, in, u, dt, params);
  }
  throw std::logic_error("unreachable");
}

}  // namespace pushrl
