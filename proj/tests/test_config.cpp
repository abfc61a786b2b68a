#include "pushrl/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "pushrl/io.hpp"

namespace pushrl {
namespace {

TEST(ValidateConfig, EmptyFileListsRequiredKeys) {
  const auto r = validate_config("");
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_NE(r.errors[0].find("command"), std::string::npos);
}

TEST(ValidateConfig, AlphaRangeError) {
  const auto r = validate_config("command = train\ntrajectory = t.kv\nalpha = 1.5\n");
  ASSERT_FALSE(r.ok());
  bool found = false;
  for (const auto& e : r.errors) found = found || e.find("alpha") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(ValidateConfig, UnknownKeysRejected) {
  const auto r = validate_config("command = plan\nmystery_knob = 3\n");
  ASSERT_FALSE(r.ok());
  EXPECT_NE(r.errors[0].find("mystery_knob"), std::string::npos);
}

TEST(ValidateConfig, CollectsAllErrorsAtOnce) {
  const auto r = validate_config(
      "command = warp\nalpha = 7\nepisodes = -2\nseeds = x\nbogus = 1\n");
  ASSERT_FALSE(r.ok());
  EXPECT_GE(r.errors.size(), 4u);
}

TEST(ValidateConfig, MinimalConfigFillsDocumentedDefaults) {
  const auto r = validate_config("command = plan\n");
  ASSERT_TRUE(r.ok()) << r.errors.front();
  const ExperimentConfig& c = *r.config;
  EXPECT_EQ(c.layout, "reduced");
  EXPECT_EQ(c.model, ModelKind::quasistatic);
  EXPECT_DOUBLE_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{1});
  EXPECT_EQ(c.episodes, 1000);
  EXPECT_EQ(c.agent_hidden, (std::vector<int>{256, 256, 256}));
  EXPECT_EQ(c.agent_batch, 256);
  EXPECT_DOUBLE_EQ(c.agent_gamma, 0.98);
  EXPECT_DOUBLE_EQ(c.agent_polyak, 0.95);
  EXPECT_DOUBLE_EQ(c.planner_goal_bias, 0.1);
  EXPECT_EQ(c.train_her_k, 4);
  EXPECT_EQ(c.train_updates_per_episode, 40);

  // Round trip: serializing the defaults and re-validating is stable.
  const auto again = validate_config(config_to_kv(c).serialize());
  ASSERT_TRUE(again.ok()) << again.errors.front();
  EXPECT_EQ(again.config->episodes, c.episodes);
  EXPECT_EQ(again.config->agent_hidden, c.agent_hidden);
  EXPECT_DOUBLE_EQ(again.config->alpha, c.alpha);
}

TEST(ValidateConfig, SeedRangeSyntax) {
  const auto r = validate_config("command = plan\nseeds = 3..7\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.config->seeds, (std::vector<std::uint64_t>{3, 4, 5, 6, 7}));
}

TEST(ValidateConfig, PerCommandRequirements) {
  EXPECT_FALSE(validate_config("command = evaluate\n").ok());
  EXPECT_FALSE(validate_config("command = baseline\n").ok());
  EXPECT_FALSE(validate_config("command = reproduce\n").ok());
  EXPECT_FALSE(validate_config("command = train\nalpha = 0.5\n").ok());
  EXPECT_TRUE(validate_config("command = train\nalpha = 0\n").ok());
}

TEST(Io, AtomicWriteLeavesNoTemp) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "pushrl_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "x.csv";
  atomic_write_file(path, "a,b\n1,2\n");
  EXPECT_EQ(read_file(path), "a,b\n1,2\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "x.csv.tmp"));
  std::filesystem::remove_all(dir);
}

TEST(Io, ChecksumStable) {
  EXPECT_EQ(fnv1a64_hex("hello"), fnv1a64_hex("hello"));
  EXPECT_NE(fnv1a64_hex("hello"), fnv1a64_hex("hellp"));
  EXPECT_EQ(fnv1a64_hex(""), "cbf29ce484222325");
}

TEST(Io, CsvFormat) {
  CsvBuilder csv({"episode", "success_rate", "seed", "config_id"});
  csv.append_row({"50", csv_num(0.25), "1", "a0.5-quasistatic"});
  EXPECT_EQ(csv.str(), "episode,success_rate,seed,config_id\n50,0.25,1,a0.5-quasistatic\n");
}

TEST(Io, ManifestTracksOutputs) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "pushrl_mani_test";
  std::filesystem::remove_all(dir);
  const auto cfg = validate_config("command = plan\n");
  ASSERT_TRUE(cfg.ok());
  RunManifest manifest("plan", config_to_kv(*cfg.config), {1, 2});
  manifest.emit_output(dir / "out.csv", "x\n1\n");
  manifest.add_timing("total", 0.5);
  manifest.write(dir / "manifest.json");

  const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
  EXPECT_EQ(j["code_version"], kCodeVersion);
  EXPECT_EQ(j["outputs"].size(), 1u);
  EXPECT_EQ(j["outputs"][0]["fnv1a64"], fnv1a64_hex("x\n1\n"));
  EXPECT_TRUE(j["rng_streams"].contains("1"));
  EXPECT_TRUE(j["rng_streams"].contains("2"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace pushrl
