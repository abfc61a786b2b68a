#include "pushrl/scene.hpp"

#include <gtest/gtest.h>

#include "pushrl/io.hpp"
#include "pushrl/physics.hpp"

namespace pushrl {
namespace {

void expect_same_scene(const Scene& a, const Scene& b) {
  EXPECT_EQ(a.name, b.name);
  EXPECT_EQ(a.table_half_extent, b.table_half_extent);
  EXPECT_EQ(a.robot_shape.a, b.robot_shape.a);
  EXPECT_EQ(a.robot_start.x, b.robot_start.x);
  ASSERT_EQ(a.num_objects(), b.num_objects());
  for (int i = 0; i < a.num_objects(); ++i) {
    EXPECT_EQ(a.object_starts[i].x, b.object_starts[i].x);
    EXPECT_EQ(a.object_starts[i].y, b.object_starts[i].y);
    EXPECT_EQ(a.object_shapes[i].a, b.object_shapes[i].a);
  }
  ASSERT_EQ(a.num_obstacles(), b.num_obstacles());
  for (int i = 0; i < a.num_obstacles(); ++i) {
    EXPECT_EQ(a.obstacle_poses[i].x, b.obstacle_poses[i].x);
    EXPECT_EQ(a.obstacle_shapes[i].a, b.obstacle_shapes[i].a);
  }
  EXPECT_EQ(a.goal_center, b.goal_center);
  EXPECT_EQ(a.goal_radius, b.goal_radius);
  EXPECT_EQ(a.episode_len, b.episode_len);
  EXPECT_EQ(a.target_index, b.target_index);
}

TEST(SceneIo, KvRoundTripExact) {
  for (int id : {1, 2, 3}) {
    const Scene scene = make_layout(id);
    const Scene back = scene_from_kv(scene_to_kv(scene));
    expect_same_scene(scene, back);
  }
  expect_same_scene(make_reduced_layout(), scene_from_kv(scene_to_kv(make_reduced_layout())));
}

// The shipped layout files must stay in sync with the builtin definitions.
TEST(SceneIo, ShippedLayoutFilesMatchBuiltins) {
  const std::filesystem::path root = std::filesystem::path(__FILE__).parent_path().parent_path();
  struct Row {
    const char* file;
    Scene scene;
  };
  const std::vector<Row> rows = {{"layouts/env1.kv", make_layout(1)},
                                 {"layouts/env2.kv", make_layout(2)},
                                 {"layouts/env3.kv", make_layout(3)},
                                 {"layouts/reduced.kv", make_reduced_layout()}};
  for (const auto& row : rows) {
    KvParseResult pr;
    const KvFile kv = KvFile::parse(read_file(root / row.file), pr);
    ASSERT_TRUE(pr.ok()) << row.file;
    expect_same_scene(scene_from_kv(kv), row.scene);
  }
}

TEST(SceneIo, LayoutValidation) {
  KvFile kv = scene_to_kv(make_layout(1));
  kv.set("target.index", "7");
  EXPECT_THROW(scene_from_kv(kv), std::runtime_error);

  KvFile kv2 = scene_to_kv(make_layout(1));
  kv2.set("object.0.shape", "box -1 0.04");
  EXPECT_THROW(scene_from_kv(kv2), std::exception);

  KvFile kv3 = scene_to_kv(make_layout(1));
  kv3.set("schema_version", "99");
  EXPECT_THROW(scene_from_kv(kv3), std::runtime_error);
}

TEST(SceneIo, StartStatesAreValid) {
  for (int id : {1, 2, 3}) {
    const Scene scene = make_layout(id);
    const WorldState s = initial_state(scene);
    EXPECT_TRUE(state_collision_free(scene, s)) << id;
    EXPECT_TRUE(state_in_bounds(scene, s)) << id;
  }
  const Scene reduced = make_reduced_layout();
  EXPECT_TRUE(state_collision_free(reduced, initial_state(reduced)));
}

}  // namespace
}  // namespace pushrl
