#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pushrl/ddpg.hpp"
#include "pushrl/kv.hpp"
#include "pushrl/physics.hpp"

namespace pushrl {

enum class Command { plan, train, evaluate, baseline, cartpole_study, reproduce };

inline std::string command_name(Command c) {
  switch (c) {
    case Command::plan: return "plan";
    case Command::train: return "train";
    case Command::evaluate: return "evaluate";
    case Command::baseline: return "baseline";
    case Command::cartpole_study: return "cartpole-study";
    case Command::reproduce: return "reproduce";
  }
  return "?";
}

// Fully validated experiment description: one command plus every knob it can
// touch, defaults filled. Built from a kv config file merged with
// command-line overrides.
struct ExperimentConfig {
  Command command = Command::plan;
  std::string layout = "reduced";  // builtin name (env1|env2|env3|reduced) or file path
  ModelKind model = ModelKind::quasistatic;
  double alpha = 0.5;
  std::vector<std::uint64_t> seeds = {1};
  int episodes = 1000;  // M
  std::string out_dir = "runs/out";
  std::string trajectory;      // input trajectory file (train/baseline)
  std::string checkpoint;      // input checkpoint (evaluate/baseline)
  std::string preset;          // reproduce target
  int trials = 50;             // evaluate/baseline rollouts
  std::string baseline_kind = "all";
  std::string config_id;       // label stamped into CSVs; defaulted per command

  // env
  double env_obs_noise_pos = 0.0;
  double env_obs_noise_ang = 0.0;
  bool env_randomize = true;
  double env_randomization_scale = 2.0;

  // agent + training loop
  std::vector<int> agent_hidden = {256, 256, 256};
  int agent_batch = 256;
  double agent_gamma = 0.98;
  double agent_polyak = 0.95;
  double agent_lr = 1e-3;
  double agent_action_l2 = 0.1;
  double agent_eps_random = 0.3;
  double agent_sigma_noise = 0.2;
  int train_eval_interval = 50;
  int train_eval_episodes = 20;
  int train_updates_per_episode = 40;
  int train_target_update_interval = 1;
  int train_her_k = 4;
  long long train_buffer_capacity = 1000000;

  // planner
  double planner_goal_bias = 0.1;
  double planner_duration_min = 0.5;
  double planner_duration_max = 2.0;
  int planner_max_iterations = 20000;
  int planner_candidates = 10;

  // cartpole study
  int study_episodes = 260;
  int study_eval_interval = 130;
  int study_eval_rollouts = 10;
  int study_updates_per_episode = 40;
  std::string study_grid = "0,0,1;0,0.5,0.5;0.5,0,0.5;0.25,0.25,0.5";  // w_oracle,w_uniform,w_start

  DdpgConfig agent_config() const {
    DdpgConfig a;
    a.hidden = agent_hidden;
    a.batch = agent_batch;
    a.gamma = agent_gamma;
    a.polyak = agent_polyak;
    a.lr = agent_lr;
    a.action_l2 = agent_action_l2;
    a.eps_random = agent_eps_random;
    a.sigma_noise = agent_sigma_noise;
    return a;
  }
};

struct ConfigResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;
  bool ok() const { return config.has_value(); }
};

namespace detail {

// "1..5" or "1 2 3"
inline std::vector<std::uint64_t> parse_seeds(const std::string& s, std::vector<std::string>& errors) {
  std::vector<std::uint64_t> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    try {
      const long long lo = std::stoll(s.substr(0, dots));
      const long long hi = std::stoll(s.substr(dots + 2));
      if (lo < 0 || hi < lo || hi - lo > 100000) throw std::invalid_argument(s);
      for (long long v = lo; v <= hi; ++v) out.push_back(std::uint64_t(v));
    } catch (const std::exception&) {
      errors.push_back("seeds: cannot parse range '" + s + "'");
    }
    return out;
  }
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(std::uint64_t(std::stoull(tok)));
    } catch (const std::exception&) {
      errors.push_back("seeds: '" + tok + "' is not a seed");
    }
  }
  return out;
}

inline std::vector<int> parse_ints(const std::string& s, const std::string& key,
                                   std::vector<std::string>& errors) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    try {
      out.push_back(int(std::stol(tok)));
    } catch (const std::exception&) {
      errors.push_back(key + ": '" + tok + "' is not an integer");
    }
  }
  return out;
}

}  // namespace detail

// Exhaustive validation: every error is collected, unknown keys are
// rejected, and all defaults are filled on success.
inline ConfigResult validate_config(const std::string& text) {
  ConfigResult result;
  KvParseResult parse;
  const KvFile kv = KvFile::parse(text, parse);
  result.errors = parse.errors;

  ExperimentConfig cfg;
  auto& errors = result.errors;

  auto get_double = [&](const char* key, double fallback, double lo, double hi) {
    const auto v = kv.get(key);
    if (!v) return fallback;
    try {
      const double d = KvFile::to_double(*v, key);
      if (d < lo || d > hi) {
        errors.push_back(std::string(key) + ": " + *v + " out of range [" +
                         KvFile::format_double(lo) + ", " + KvFile::format_double(hi) + "]");
        return fallback;
      }
      return d;
    } catch (const std::exception& e) {
      errors.push_back(e.what());
      return fallback;
    }
  };
  auto get_int = [&](const char* key, long long fallback, long long lo, long long hi) {
    const auto v = kv.get(key);
    if (!v) return fallback;
    try {
      const long long d = KvFile::to_int(*v, key);
      if (d < lo || d > hi) {
        errors.push_back(std::string(key) + ": " + *v + " out of range [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
        return fallback;
      }
      return d;
    } catch (const std::exception& e) {
      errors.push_back(e.what());
      return fallback;
    }
  };
  auto get_bool = [&](const char* key, bool fallback) {
    const auto v = kv.get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    errors.push_back(std::string(key) + ": '" + *v + "' is not a bool (true/false)");
    return fallback;
  };

  if (kv.has("schema_version")) {
    const long long v = get_int("schema_version", KvFile::kSchemaVersion, 1, 1);
    (void)v;
  }

  const auto cmd = kv.get("command");
  if (!cmd) {
    errors.push_back("missing required key 'command' (plan|train|evaluate|baseline|cartpole-study|reproduce)");
  } else if (*cmd == "plan") {
    cfg.command = Command::plan;
  } else if (*cmd == "train") {
    cfg.command = Command::train;
  } else if (*cmd == "evaluate") {
    cfg.command = Command::evaluate;
  } else if (*cmd == "baseline") {
    cfg.command = Command::baseline;
  } else if (*cmd == "cartpole-study") {
    cfg.command = Command::cartpole_study;
  } else if (*cmd == "reproduce") {
    cfg.command = Command::reproduce;
  } else {
    errors.push_back("command: unknown command '" + *cmd + "'");
  }

  cfg.layout = kv.get_string("layout", cfg.layout);
  if (const auto m = kv.get("model")) {
    try {
      cfg.model = model_from_name(*m);
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  cfg.alpha = get_double("alpha", cfg.alpha, 0.0, 1.0);
  if (const auto s = kv.get("seeds")) {
    cfg.seeds = detail::parse_seeds(*s, errors);
    if (cfg.seeds.empty()) errors.push_back("seeds: list must be nonempty");
  }
  cfg.episodes = int(get_int("episodes", cfg.episodes, 0, 100000000));
  cfg.out_dir = kv.get_string("out", cfg.out_dir);
  cfg.trajectory = kv.get_string("trajectory", cfg.trajectory);
  cfg.checkpoint = kv.get_string("checkpoint", cfg.checkpoint);
  cfg.preset = kv.get_string("preset", cfg.preset);
  cfg.trials = int(get_int("trials", cfg.trials, 1, 10000000));
  cfg.baseline_kind = kv.get_string("baseline.kind", cfg.baseline_kind);
  cfg.config_id = kv.get_string("config_id", cfg.config_id);

  cfg.env_obs_noise_pos = get_double("env.obs_noise_pos", cfg.env_obs_noise_pos, 0.0, 1.0);
  cfg.env_obs_noise_ang = get_double("env.obs_noise_ang", cfg.env_obs_noise_ang, 0.0, 3.2);
  cfg.env_randomize = get_bool("env.randomize", cfg.env_randomize);
  cfg.env_randomization_scale =
      get_double("env.randomization_scale", cfg.env_randomization_scale, 0.0, 100.0);

  if (const auto h = kv.get("agent.hidden")) {
    cfg.agent_hidden = detail::parse_ints(*h, "agent.hidden", errors);
    for (int w : cfg.agent_hidden)
      if (w < 1) errors.push_back("agent.hidden: widths must be positive");
    if (cfg.agent_hidden.empty()) errors.push_back("agent.hidden: must be nonempty");
  }
  cfg.agent_batch = int(get_int("agent.batch", cfg.agent_batch, 1, 1000000));
  cfg.agent_gamma = get_double("agent.gamma", cfg.agent_gamma, 0.0, 0.999999);
  cfg.agent_polyak = get_double("agent.polyak", cfg.agent_polyak, 0.0, 1.0);
  cfg.agent_lr = get_double("agent.lr", cfg.agent_lr, 0.0, 10.0);
  cfg.agent_action_l2 = get_double("agent.action_l2", cfg.agent_action_l2, 0.0, 100.0);
  cfg.agent_eps_random = get_double("agent.eps_random", cfg.agent_eps_random, 0.0, 1.0);
  cfg.agent_sigma_noise = get_double("agent.sigma_noise", cfg.agent_sigma_noise, 0.0, 10.0);
  cfg.train_eval_interval = int(get_int("train.eval_interval", cfg.train_eval_interval, 1, 1000000));
  cfg.train_eval_episodes = int(get_int("train.eval_episodes", cfg.train_eval_episodes, 1, 1000000));
  cfg.train_updates_per_episode =
      int(get_int("train.updates_per_episode", cfg.train_updates_per_episode, 0, 1000000));
  cfg.train_target_update_interval =
      int(get_int("train.target_update_interval", cfg.train_target_update_interval, 1, 1000000));
  cfg.train_her_k = int(get_int("train.her_k", cfg.train_her_k, 0, 1000));
  cfg.train_buffer_capacity =
      get_int("train.buffer_capacity", cfg.train_buffer_capacity, 1, 1000000000);

  cfg.planner_goal_bias = get_double("planner.goal_bias", cfg.planner_goal_bias, 0.0, 1.0);
  cfg.planner_duration_min = get_double("planner.duration_min", cfg.planner_duration_min, 0.1, 60.0);
  cfg.planner_duration_max = get_double("planner.duration_max", cfg.planner_duration_max, 0.1, 60.0);
  if (cfg.planner_duration_max < cfg.planner_duration_min)
    errors.push_back("planner.duration_max: must be >= planner.duration_min");
  cfg.planner_max_iterations =
      int(get_int("planner.max_iterations", cfg.planner_max_iterations, 1, 100000000));
  cfg.planner_candidates = int(get_int("planner.candidates", cfg.planner_candidates, 0, 10000));

  cfg.study_episodes = int(get_int("study.episodes", cfg.study_episodes, 0, 100000000));
  cfg.study_eval_interval = int(get_int("study.eval_interval", cfg.study_eval_interval, 1, 1000000));
  cfg.study_eval_rollouts = int(get_int("study.eval_rollouts", cfg.study_eval_rollouts, 1, 1000000));
  cfg.study_updates_per_episode =
      int(get_int("study.updates_per_episode", cfg.study_updates_per_episode, 0, 1000000));
  cfg.study_grid = kv.get_string("study.grid", cfg.study_grid);

  // Per-command requirements.
  if (cmd) {
    if (cfg.command == Command::evaluate && cfg.checkpoint.empty())
      errors.push_back("evaluate: missing required key 'checkpoint'");
    if (cfg.command == Command::baseline && cfg.trajectory.empty())
      errors.push_back("baseline: missing required key 'trajectory'");
    if (cfg.command == Command::reproduce && cfg.preset.empty())
      errors.push_back("reproduce: missing required key 'preset'");
    if (cfg.command == Command::train && cfg.alpha > 0.0 && cfg.trajectory.empty())
      errors.push_back("train: alpha > 0 requires key 'trajectory'");
  }

  for (const auto& k : kv.unused_keys()) errors.push_back("unknown key '" + k + "'");

  if (errors.empty()) result.config = std::move(cfg);
  return result;
}

// Serializes the effective configuration; this is the manifest snapshot.
inline KvFile config_to_kv(const ExperimentConfig& cfg) {
  KvFile kv;
  kv.set_int("schema_version", KvFile::kSchemaVersion);
  kv.set("command", command_name(cfg.command));
  kv.set("layout", cfg.layout);
  kv.set("model", model_name(cfg.model));
  kv.set_double("alpha", cfg.alpha);
  {
    std::string s;
    for (size_t i = 0; i < cfg.seeds.size(); ++i)
      s += (i ? " " : "") + std::to_string(cfg.seeds[i]);
    kv.set("seeds", s);
  }
  kv.set_int("episodes", cfg.episodes);
  kv.set("out", cfg.out_dir);
  if (!cfg.trajectory.empty()) kv.set("trajectory", cfg.trajectory);
  if (!cfg.checkpoint.empty()) kv.set("checkpoint", cfg.checkpoint);
  if (!cfg.preset.empty()) kv.set("preset", cfg.preset);
  kv.set_int("trials", cfg.trials);
  kv.set("baseline.kind", cfg.baseline_kind);
  if (!cfg.config_id.empty()) kv.set("config_id", cfg.config_id);
  kv.set_double("env.obs_noise_pos", cfg.env_obs_noise_pos);
  kv.set_double("env.obs_noise_ang", cfg.env_obs_noise_ang);
  kv.set("env.randomize", cfg.env_randomize ? "true" : "false");
  kv.set_double("env.randomization_scale", cfg.env_randomization_scale);
  {
    std::string s;
    for (size_t i = 0; i < cfg.agent_hidden.size(); ++i)
      s += (i ? " " : "") + std::to_string(cfg.agent_hidden[i]);
    kv.set("agent.hidden", s);
  }
  kv.set_int("agent.batch", cfg.agent_batch);
  kv.set_double("agent.gamma", cfg.agent_gamma);
  kv.set_double("agent.polyak", cfg.agent_polyak);
  kv.set_double("agent.lr", cfg.agent_lr);
  kv.set_double("agent.action_l2", cfg.agent_action_l2);
  kv.set_double("agent.eps_random", cfg.agent_eps_random);
  kv.set_double("agent.sigma_noise", cfg.agent_sigma_noise);
  kv.set_int("train.eval_interval", cfg.train_eval_interval);
  kv.set_int("train.eval_episodes", cfg.train_eval_episodes);
  kv.set_int("train.updates_per_episode", cfg.train_updates_per_episode);
  kv.set_int("train.target_update_interval", cfg.train_target_update_interval);
  kv.set_int("train.her_k", cfg.train_her_k);
  kv.set_int("train.buffer_capacity", cfg.train_buffer_capacity);
  kv.set_double("planner.goal_bias", cfg.planner_goal_bias);
  kv.set_double("planner.duration_min", cfg.planner_duration_min);
  kv.set_double("planner.duration_max", cfg.planner_duration_max);
  kv.set_int("planner.max_iterations", cfg.planner_max_iterations);
  kv.set_int("planner.candidates", cfg.planner_candidates);
  kv.set_int("study.episodes", cfg.study_episodes);
  kv.set_int("study.eval_interval", cfg.study_eval_interval);
  kv.set_int("study.eval_rollouts", cfg.study_eval_rollouts);
  kv.set_int("study.updates_per_episode", cfg.study_updates_per_episode);
  kv.set("study.grid", cfg.study_grid);
  return kv;
}

}  // namespace pushrl
