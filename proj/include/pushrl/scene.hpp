#pragma once

#include <string>
#include <vector>

#include "pushrl/geometry.hpp"
#include "pushrl/kv.hpp"

namespace pushrl {

// Static description of a tabletop world: who exists, where everything
// starts, and where the target object must end up. Entity ids: 0 is the
// robot, 1..m are movable objects, m+1.. are obstacles.
struct Scene {
  std::string name;
  double table_half_extent = 0.5;  // square workspace, centered at origin

  ConvexShape robot_shape = ConvexShape::box(0.08, 0.04, EntityClass::robot);
  SE2Pose robot_start;

  std::vector<ConvexShape> object_shapes;
  std::vector<SE2Pose> object_starts;
  int target_index = 0;  // index into objects

  std::vector<ConvexShape> obstacle_shapes;
  std::vector<SE2Pose> obstacle_poses;

  Vec2 goal_center = Vec2::Zero();
  double goal_radius = 0.05;
  int episode_len = 50;

  int num_objects() const { return int(object_shapes.size()); }
  int num_obstacles() const { return int(obstacle_shapes.size()); }
};

namespace detail {
inline ConvexShape cube8(EntityClass cls = EntityClass::movable) {
  return ConvexShape::box(0.04, 0.04, cls);
}
}  // namespace detail

// The three benchmark layouts: target front-center, goal behind, two other
// movables in between; layouts 2 and 3 add a wall obstacle (30 cm and 70 cm
// long) between target and goal.
inline Scene make_layout(int id) {
  Scene s;
  s.robot_start = make_pose(0.0, -0.40, 0.0);
  s.object_shapes = {detail::cube8(), detail::cube8(), detail::cube8()};
  s.goal_center = Vec2(0.0, 0.35);
  switch (id) {
    case 1:
      s.name = "env1";
      s.object_starts = {make_pose(0.0, -0.25, 0.0), make_pose(-0.13, -0.05, 0.0),
                         make_pose(0.13, 0.05, 0.0)};
      s.episode_len = 50;
      break;
    case 2:
      s.name = "env2";
      s.object_starts = {make_pose(0.0, -0.25, 0.0), make_pose(-0.18, -0.08, 0.0),
                         make_pose(0.18, -0.02, 0.0)};
      s.obstacle_shapes = {ConvexShape::box(0.15, 0.04, EntityClass::obstacle)};
      s.obstacle_poses = {make_pose(0.0, 0.10, 0.0)};
      s.episode_len = 50;
      break;
    case 3:
      s.name = "env3";
      s.object_starts = {make_pose(0.0, -0.25, 0.0), make_pose(-0.15, -0.10, 0.0),
                         make_pose(0.15, -0.10, 0.0)};
      s.obstacle_shapes = {ConvexShape::box(0.35, 0.04, EntityClass::obstacle)};
      // Off-center wall: the wider right corridor keeps the long-horizon
      // task solvable for pushing, the narrow left one stays blocked.
      s.obstacle_poses = {make_pose(-0.05, 0.10, 0.0)};
      s.episode_len = 150;
      break;
    default:
      throw std::invalid_argument("make_layout: id must be 1, 2, or 3");
  }
  return s;
}

// Single-object short-horizon layout used for the desk-scale training and
// controller-comparison experiments. The robot starts well away from the
// cube so undirected exploration rarely produces contact within the
// horizon; reaching the goal needs the full approach-then-push maneuver.
inline Scene make_reduced_layout() {
  Scene s;
  s.name = "reduced";
  s.robot_start = make_pose(-0.25, -0.30, 0.0);
  s.object_shapes = {detail::cube8()};
  s.object_starts = {make_pose(0.0, -0.12, 0.0)};
  s.goal_center = Vec2(0.0, 0.18);
  s.episode_len = 30;
  return s;
}

inline KvFile scene_to_kv(const Scene& s) {
  KvFile kv;
  kv.set_int("schema_version", KvFile::kSchemaVersion);
  kv.set("name", s.name);
  kv.set_double("table.half_extent", s.table_half_extent);

  auto put_shape = [&kv](const std::string& prefix, const ConvexShape& sh) {
    if (sh.kind == ConvexShape::Kind::box)
      kv.set(prefix, "box " + KvFile::format_double(sh.a) + " " + KvFile::format_double(sh.b));
    else
      kv.set(prefix, "disc " + KvFile::format_double(sh.a));
  };
  auto put_pose = [&kv](const std::string& prefix, const SE2Pose& p) {
    kv.set_doubles(prefix, {p.x, p.y, p.theta});
  };

  put_shape("robot.shape", s.robot_shape);
  put_pose("robot.pose", s.robot_start);
  kv.set_int("objects.count", s.num_objects());
  for (int i = 0; i < s.num_objects(); ++i) {
    put_shape("object." + std::to_string(i) + ".shape", s.object_shapes[i]);
    put_pose("object." + std::to_string(i) + ".pose", s.object_starts[i]);
  }
  kv.set_int("target.index", s.target_index);
  kv.set_int("obstacles.count", s.num_obstacles());
  for (int i = 0; i < s.num_obstacles(); ++i) {
    put_shape("obstacle." + std::to_string(i) + ".shape", s.obstacle_shapes[i]);
    put_pose("obstacle." + std::to_string(i) + ".pose", s.obstacle_poses[i]);
  }
  kv.set_doubles("goal.center", {s.goal_center.x(), s.goal_center.y()});
  kv.set_double("goal.radius", s.goal_radius);
  kv.set_int("episode_len", s.episode_len);
  return kv;
}

inline Scene scene_from_kv(const KvFile& kv) {
  const long long ver = kv.require_int("schema_version");
  if (ver != KvFile::kSchemaVersion)
    throw std::runtime_error("layout: unsupported schema_version " + std::to_string(ver));

  auto get_shape = [&kv](const std::string& key, EntityClass cls) {
    std::istringstream in(kv.require(key));
    std::string kind;
    in >> kind;
    if (kind == "box") {
      double a, b;
      if (!(in >> a >> b)) throw std::runtime_error("key '" + key + "': bad box extents");
      return ConvexShape::box(a, b, cls);
    }
    if (kind == "disc") {
      double r;
      if (!(in >> r)) throw std::runtime_error("key '" + key + "': bad disc radius");
      return ConvexShape::disc(r, cls);
    }
    throw std::runtime_error("key '" + key + "': unknown shape kind '" + kind + "'");
  };
  auto get_pose = [&kv](const std::string& key) {
    const auto v = kv.require_doubles(key, 3);
    return make_pose(v[0], v[1], v[2]);
  };

  Scene s;
  s.name = kv.get_string("name", "");
  s.table_half_extent = kv.require_double("table.half_extent");
  s.robot_shape = get_shape("robot.shape", EntityClass::robot);
  s.robot_start = get_pose("robot.pose");
  const int nobj = int(kv.require_int("objects.count"));
  for (int i = 0; i < nobj; ++i) {
    s.object_shapes.push_back(get_shape("object." + std::to_string(i) + ".shape", EntityClass::movable));
    s.object_starts.push_back(get_pose("object." + std::to_string(i) + ".pose"));
  }
  s.target_index = int(kv.require_int("target.index"));
  if (s.target_index < 0 || s.target_index >= nobj)
    throw std::runtime_error("layout: target.index out of range");
  const int nobs = int(kv.require_int("obstacles.count"));
  for (int i = 0; i < nobs; ++i) {
    s.obstacle_shapes.push_back(get_shape("obstacle." + std::to_string(i) + ".shape", EntityClass::obstacle));
    s.obstacle_poses.push_back(get_pose("obstacle." + std::to_string(i) + ".pose"));
  }
  const auto gc = kv.require_doubles("goal.center", 2);
  s.goal_center = Vec2(gc[0], gc[1]);
  s.goal_radius = kv.require_double("goal.radius");
  s.episode_len = int(kv.require_int("episode_len"));
  return s;
}

}  // namespace pushrl
