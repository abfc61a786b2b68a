// pushrl: planar pushing rearrangement toolkit.
// Subcommands: plan, train, evaluate, baseline, cartpole-study, reproduce.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>

#include "pushrl/baselines.hpp"
#include "pushrl/config.hpp"
#include "pushrl/io.hpp"
#include "pushrl/trainer.hpp"

namespace pushrl {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPlanner = 3;
constexpr int kExitTraining = 4;

namespace fs = std::filesystem;

fs::path resolve_out_dir(const std::string& out_dir) {
  fs::path p(out_dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("PUSHRL_OUT_ROOT")) p = fs::path(root) / p;
  }
  return p;
}

Scene load_layout(const std::string& spec) {
  if (spec == "env1") return make_layout(1);
  if (spec == "env2") return make_layout(2);
  if (spec == "env3") return make_layout(3);
  if (spec == "1" || spec == "2" || spec == "3") return make_layout(spec[0] - '0');
  if (spec == "reduced") return make_reduced_layout();
  KvParseResult pr;
  const KvFile kv = KvFile::parse(read_file(spec), pr);
  if (!pr.ok()) throw std::runtime_error("layout " + spec + ": " + pr.errors.front());
  return scene_from_kv(kv);
}

PlannedTrajectory load_trajectory(const std::string& path) {
  KvParseResult pr;
  const KvFile kv = KvFile::parse(read_file(path), pr);
  if (!pr.ok()) throw std::runtime_error("trajectory " + path + ": " + pr.errors.front());
  return trajectory_from_kv(kv);
}

PlannerConfig planner_config(const ExperimentConfig& cfg) {
  PlannerConfig p;
  p.model = cfg.model;
  p.goal_bias = cfg.planner_goal_bias;
  p.duration_min = cfg.planner_duration_min;
  p.duration_max = cfg.planner_duration_max;
  p.max_iterations = cfg.planner_max_iterations;
  p.control_candidates = cfg.planner_candidates;
  return p;
}

RearrangeEnvConfig env_config(const ExperimentConfig& cfg, const Scene& scene) {
  RearrangeEnvConfig e;
  e.scene = scene;
  e.model = ModelKind::dynamic;  // learning and execution use full dynamics
  e.obs_noise_pos = cfg.env_obs_noise_pos;
  e.obs_noise_ang = cfg.env_obs_noise_ang;
  e.randomize = cfg.env_randomize;
  e.randomization_scale = cfg.env_randomization_scale;
  return e;
}

TrainConfig train_config(const ExperimentConfig& cfg, const Scene& scene, double alpha,
                         std::uint64_t seed, const std::string& config_id) {
  TrainConfig t;
  t.env = env_config(cfg, scene);
  t.agent = cfg.agent_config();
  t.resets = ResetDistribution::planned_mix(alpha);
  t.episodes = cfg.episodes;
  t.eval_interval = cfg.train_eval_interval;
  t.eval_episodes = cfg.train_eval_episodes;
  t.updates_per_episode = cfg.train_updates_per_episode;
  t.target_update_interval = cfg.train_target_update_interval;
  t.her_k = cfg.train_her_k;
  t.buffer_capacity = size_t(cfg.train_buffer_capacity);
  t.seed = seed;
  t.config_id = config_id;
  return t;
}

std::string trim_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string curve_csv(const std::vector<LearningCurve>& curves) {
  CsvBuilder csv({"episode", "success_rate", "seed", "config_id"});
  for (const auto& c : curves)
    for (const auto& p : c.points)
      csv.append_row({std::to_string(p.episode), csv_num(p.success_rate),
                      std::to_string(c.seed), c.config_id});
  return csv.str();
}

std::string stat_cell(double v) {
  return std::isinf(v) ? "not_reached" : csv_num(v);
}

// Fig. 6 analog: per-config episodes-to-threshold medians and percentiles.
std::string threshold_csv(const std::vector<std::pair<std::string, ThresholdStats>>& rows,
                          double threshold, int n_seeds) {
  CsvBuilder csv({"config_id", "threshold", "median_episodes", "p20_episodes", "p80_episodes",
                  "seeds", "not_reached"});
  for (const auto& [id, stats] : rows) {
    int not_reached = 0;
    for (double v : stats.per_curve) not_reached += std::isinf(v) ? 1 : 0;
    csv.append_row({id, csv_num(threshold), stat_cell(stats.median), stat_cell(stats.p20),
                    stat_cell(stats.p80), std::to_string(n_seeds), std::to_string(not_reached)});
  }
  return csv.str();
}

void save_checkpoint_file(const fs::path& path, const DdpgAgent& agent, const Rng& rng,
                          RunManifest& manifest) {
  std::ostringstream ss;
  agent.save(ss, rng.state());
  manifest.emit_output(path, ss.str());
}

DdpgAgent load_checkpoint_file(const std::string& path, DdpgConfig cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::array<std::uint64_t, 4> rng_state{};
  return DdpgAgent::load(in, std::move(cfg), rng_state);
}

// --- plan --------------------------------------------------------------

int run_plan(const ExperimentConfig& cfg, RunManifest& manifest) {
  const Scene scene = load_layout(cfg.layout);
  const fs::path out = resolve_out_dir(cfg.out_dir);
  bool any_failed = false;
  for (const auto seed : cfg.seeds) {
    Rng rng(derive_seed(seed, 21));
    const auto res = plan(scene, planner_config(cfg), rng, std::nullopt, seed);
    manifest.add_timing("plan_seed_" + std::to_string(seed), res.stats.wall_seconds);
    if (!res.ok()) {
      std::fprintf(stderr, "plan: seed %llu failed: %s (iterations=%d nodes=%d)\n",
                   (unsigned long long)seed, res.error.c_str(), res.stats.iterations,
                   res.stats.nodes);
      nlohmann::json err;
      err["seed"] = seed;
      err["error"] = res.error;
      err["iterations"] = res.stats.iterations;
      err["nodes"] = res.stats.nodes;
      manifest.set("planner_failure_seed_" + std::to_string(seed), err);
      any_failed = true;
      continue;
    }
    const fs::path file =
        out / ("trajectory_" + model_name(cfg.model) + "_seed" + std::to_string(seed) + ".kv");
    manifest.emit_output(file, trajectory_to_kv(*res.trajectory).serialize("planned trajectory"));
    std::printf("plan: seed %llu -> %s (%zu states, %.2fs, %d iterations)\n",
                (unsigned long long)seed, file.string().c_str(), res.trajectory->states.size(),
                res.stats.wall_seconds, res.stats.iterations);
  }
  return any_failed ? kExitPlanner : kExitOk;
}

// --- train -------------------------------------------------------------

int run_train(const ExperimentConfig& cfg, RunManifest& manifest) {
  const Scene scene = load_layout(cfg.layout);
  const fs::path out = resolve_out_dir(cfg.out_dir);

  std::optional<PlannedTrajectory> traj;
  std::string id_suffix = "none";
  if (cfg.alpha > 0.0) {
    traj = load_trajectory(cfg.trajectory);
    id_suffix = model_name(traj->model);
  }
  const std::string config_id =
      cfg.config_id.empty() ? "a" + trim_num(cfg.alpha) + "-" + id_suffix : cfg.config_id;

  std::vector<LearningCurve> curves;
  for (const auto seed : cfg.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult result =
        train_rearrange(train_config(cfg, scene, cfg.alpha, seed, config_id),
                        traj ? &*traj : nullptr);
    manifest.add_timing(
        "train_seed_" + std::to_string(seed),
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    curves.push_back(result.curve);
    manifest.emit_output(out / ("curve_" + config_id + "_seed" + std::to_string(seed) + ".csv"),
                         curve_csv({result.curve}));
    Rng rng_marker(derive_seed(seed, 99));
    save_checkpoint_file(out / ("checkpoint_" + config_id + "_seed" + std::to_string(seed) + ".bin"),
                         result.agent, rng_marker, manifest);
    const double last = result.curve.points.empty() ? 0.0 : result.curve.points.back().success_rate;
    std::printf("train: %s seed %llu final eval success %.2f\n", config_id.c_str(),
                (unsigned long long)seed, last);
  }
  manifest.emit_output(out / ("curves_" + config_id + ".csv"), curve_csv(curves));
  manifest.emit_output(out / ("aggregate_" + config_id + ".csv"),
                       threshold_csv({{config_id, episodes_to_threshold(curves, 0.8)}}, 0.8,
                                     int(cfg.seeds.size())));
  return kExitOk;
}

// --- evaluate ----------------------------------------------------------

int run_evaluate(const ExperimentConfig& cfg, RunManifest& manifest) {
  const Scene scene = load_layout(cfg.layout);
  const fs::path out = resolve_out_dir(cfg.out_dir);
  const DdpgAgent agent = load_checkpoint_file(cfg.checkpoint, cfg.agent_config());

  CsvBuilder csv({"controller", "layout", "trials", "successes", "success_rate", "seed"});
  for (const auto seed : cfg.seeds) {
    Rng rng(derive_seed(seed, 41));
    const double rate = evaluate_rearrange(
        env_config(cfg, scene),
        [&agent](const Observation& o, const Eigen::VectorXd& g) {
          Rng none(0);
          return agent.act(o, g, false, none);
        },
        cfg.trials, rng);
    csv.append_row({"policy", scene.name, std::to_string(cfg.trials),
                    std::to_string(int(std::lround(rate * cfg.trials))), csv_num(rate),
                    std::to_string(seed)});
    std::printf("evaluate: seed %llu success %.3f over %d trials\n", (unsigned long long)seed,
                rate, cfg.trials);
  }
  manifest.emit_output(out / "evaluation.csv", csv.str());
  return kExitOk;
}

// --- baseline ----------------------------------------------------------

int run_baseline(const ExperimentConfig& cfg, RunManifest& manifest) {
  const Scene scene = load_layout(cfg.layout);
  const fs::path out = resolve_out_dir(cfg.out_dir);
  const PlannedTrajectory traj = load_trajectory(cfg.trajectory);
  const PhysicsParams nominal = nominal_params(scene);
  const DenseReference ref = densify_reference(scene, traj, nominal);

  std::vector<ControllerKind> kinds;
  if (cfg.baseline_kind == "all") {
    kinds = {ControllerKind::open_loop, ControllerKind::velocity_feedback, ControllerKind::ilqr};
  } else if (cfg.baseline_kind == "open_loop") {
    kinds = {ControllerKind::open_loop};
  } else if (cfg.baseline_kind == "velocity_feedback") {
    kinds = {ControllerKind::velocity_feedback};
  } else if (cfg.baseline_kind == "ilqr") {
    kinds = {ControllerKind::ilqr};
  } else {
    std::fprintf(stderr, "baseline: unknown kind '%s'\n", cfg.baseline_kind.c_str());
    return kExitConfig;
  }

  const RearrangeEnvConfig env_cfg = env_config(cfg, scene);
  CsvBuilder csv({"controller", "layout", "trials", "successes", "success_rate", "seed"});

  for (const ControllerKind kind : kinds) {
    std::optional<TrackingController> ctl;
    if (kind == ControllerKind::open_loop) {
      ctl = make_open_loop(ref);
    } else if (kind == ControllerKind::velocity_feedback) {
      ctl = make_velocity_feedback(ref);
    } else {
      std::string diag;
      const auto t0 = std::chrono::steady_clock::now();
      ctl = make_ilqr_tracking(scene, ref, nominal, {}, 0.1, &diag);
      manifest.add_timing(
          "ilqr_solve",
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      if (!ctl) {
        // Long-horizon solves can fail; report rather than mask.
        std::fprintf(stderr, "baseline: ilqr solve failed: %s\n", diag.c_str());
        manifest.set("ilqr_failure", diag);
        for (const auto seed : cfg.seeds)
          csv.append_row({"ilqr", scene.name, "0", "0", "0", std::to_string(seed)});
        continue;
      }
    }
    for (const auto seed : cfg.seeds) {
      Rng rng(derive_seed(seed, 42));
      const TrialStats stats = run_controller_trials(*ctl, env_cfg, cfg.trials, rng);
      csv.append_row({controller_name(kind), scene.name, std::to_string(stats.trials),
                      std::to_string(stats.successes), csv_num(stats.success_rate),
                      std::to_string(seed)});
      std::printf("baseline: %s seed %llu success %.3f\n", controller_name(kind).c_str(),
                  (unsigned long long)seed, stats.success_rate);
    }
  }

  if (!cfg.checkpoint.empty()) {
    const DdpgAgent agent = load_checkpoint_file(cfg.checkpoint, cfg.agent_config());
    for (const auto seed : cfg.seeds) {
      Rng rng(derive_seed(seed, 43));
      const double rate = evaluate_rearrange(
          env_cfg,
          [&agent](const Observation& o, const Eigen::VectorXd& g) {
            Rng none(0);
            return agent.act(o, g, false, none);
          },
          cfg.trials, rng);
      csv.append_row({"policy", scene.name, std::to_string(cfg.trials),
                      std::to_string(int(std::lround(rate * cfg.trials))), csv_num(rate),
                      std::to_string(seed)});
      std::printf("baseline: policy seed %llu success %.3f\n", (unsigned long long)seed, rate);
    }
  }

  manifest.emit_output(out / "controllers.csv", csv.str());
  return kExitOk;
}

// --- cartpole-study ------------------------------------------------------

std::vector<ResetDistribution> parse_grid(const std::string& grid,
                                          std::vector<std::string>& ids) {
  std::vector<ResetDistribution> out;
  std::istringstream in(grid);
  std::string item;
  while (std::getline(in, item, ';')) {
    double wo = 0, wu = 0, ws = 0;
    if (std::sscanf(item.c_str(), "%lf,%lf,%lf", &wo, &wu, &ws) != 3)
      throw std::runtime_error("study.grid: cannot parse '" + item + "' (want wO,wU,wS)");
    ResetDistribution d;
    d.w_oracle = wo;
    d.w_uniform = wu;
    d.w_start = ws;
    d.validate();
    out.push_back(d);
    ids.push_back("O" + trim_num(wo) + "_U" + trim_num(wu) + "_S" + trim_num(ws));
  }
  return out;
}

int run_cartpole_study(const ExperimentConfig& cfg, RunManifest& manifest) {
  const fs::path out = resolve_out_dir(cfg.out_dir);
  std::vector<std::string> ids;
  const std::vector<ResetDistribution> grid = parse_grid(cfg.study_grid, ids);

  CartPoleParams params;
  const IlqrSolution sol = cartpole_ilqr(params, CartPoleState{0.0, 0.0, 0.02, 0.0});
  if (!sol.ok) {
    std::fprintf(stderr, "cartpole-study: oracle ilqr failed: %s\n", sol.diagnostics.c_str());
    return kExitTraining;
  }
  Rng oracle_rng(derive_seed(cfg.seeds.front(), 31));
  const CartPoleOracle oracle = cartpole_oracle_distribution(params, sol, 20, oracle_rng);

  CsvBuilder csv({"config_id", "seed", "episode", "kl"});
  CsvBuilder agg({"config_id", "seeds", "median_final_kl"});
  for (size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> finals;
    for (const auto seed : cfg.seeds) {
      CartPoleStudyConfig scfg;
      scfg.params = params;
      scfg.agent = cfg.agent_config();
      scfg.resets = grid[g];
      scfg.episodes = cfg.study_episodes;
      scfg.eval_interval = cfg.study_eval_interval;
      scfg.eval_rollouts = cfg.study_eval_rollouts;
      scfg.updates_per_episode = cfg.study_updates_per_episode;
      scfg.target_update_interval = cfg.train_target_update_interval;
      scfg.her_k = cfg.train_her_k;
      scfg.seed = seed;
      scfg.config_id = ids[g];
      const auto t0 = std::chrono::steady_clock::now();
      const KlSeries series = cartpole_mixing_run(scfg, oracle);
      manifest.add_timing(
          "study_" + ids[g] + "_seed" + std::to_string(seed),
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      for (const auto& p : series.points)
        csv.append_row({ids[g], std::to_string(seed), std::to_string(p.episode), csv_num(p.kl)});
      finals.push_back(series.points.empty() ? std::numeric_limits<double>::infinity()
                                             : series.points.back().kl);
      std::printf("cartpole-study: %s seed %llu final KL %.3f\n", ids[g].c_str(),
                  (unsigned long long)seed, finals.back());
    }
    std::sort(finals.begin(), finals.end());
    agg.append_row({ids[g], std::to_string(cfg.seeds.size()),
                    csv_num(finals[finals.size() / 2])});
  }
  manifest.emit_output(out / "kl_series.csv", csv.str());
  manifest.emit_output(out / "kl_aggregate.csv", agg.str());
  return kExitOk;
}

// --- reproduce -----------------------------------------------------------

// Desk-scale learning-curve comparison: vanilla HER vs planned resets from
// quasi-static and weld plans, on the reduced layout.
int reproduce_learning(const ExperimentConfig& cfg, RunManifest& manifest) {
  const Scene scene = load_layout(cfg.layout);
  const fs::path out = resolve_out_dir(cfg.out_dir);

  std::map<std::string, PlannedTrajectory> plans;
  for (const ModelKind model : {ModelKind::quasistatic, ModelKind::weld}) {
    ExperimentConfig pc = cfg;
    pc.model = model;
    Rng rng(derive_seed(cfg.seeds.front(), 21));
    const auto res = plan(scene, planner_config(pc), rng, std::nullopt, cfg.seeds.front());
    manifest.add_timing("plan_" + model_name(model), res.stats.wall_seconds);
    if (!res.ok()) {
      std::fprintf(stderr, "reproduce: %s planning failed: %s\n", model_name(model).c_str(),
                   res.error.c_str());
      return kExitPlanner;
    }
    manifest.emit_output(out / ("trajectory_" + model_name(model) + ".kv"),
                         trajectory_to_kv(*res.trajectory).serialize("planned trajectory"));
    plans[model_name(model)] = *res.trajectory;
  }

  struct Variant {
    std::string id;
    double alpha;
    const PlannedTrajectory* traj;
  };
  const std::vector<Variant> variants = {
      {"her", 0.0, nullptr},
      {"qs-leaper", 0.5, &plans["quasistatic"]},
      {"weld-leaper", 0.5, &plans["weld"]},
  };

  std::vector<std::pair<std::string, ThresholdStats>> table;
  std::vector<LearningCurve> all_curves;
  for (const auto& v : variants) {
    std::vector<LearningCurve> curves;
    for (const auto seed : cfg.seeds) {
      const auto t0 = std::chrono::steady_clock::now();
      TrainConfig tc = desk_train_config(scene, v.alpha, seed, v.id, cfg.episodes);
      tc.env.obs_noise_pos = cfg.env_obs_noise_pos;
      tc.env.obs_noise_ang = cfg.env_obs_noise_ang;
      const TrainResult r = train_rearrange(tc, v.traj);
      manifest.add_timing(
          v.id + "_seed" + std::to_string(seed),
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      curves.push_back(r.curve);
      all_curves.push_back(r.curve);
      std::printf("reproduce: %s seed %llu done\n", v.id.c_str(), (unsigned long long)seed);
    }
    table.emplace_back(v.id, episodes_to_threshold(curves, 0.8));
  }
  manifest.emit_output(out / "curves.csv", curve_csv(all_curves));
  manifest.emit_output(out / "episodes_to_threshold.csv",
                       threshold_csv(table, 0.8, int(cfg.seeds.size())));
  for (const auto& [id, stats] : table)
    std::printf("reproduce: %s median episodes to 80%%: %s\n", id.c_str(),
                stat_cell(stats.median).c_str());
  return kExitOk;
}

// Desk-scale controller comparison: open-loop vs iLQR tracking vs the
// learned closed-loop policy, all under randomized dynamics.
int reproduce_controllers(const ExperimentConfig& cfg, RunManifest& manifest) {
  const Scene scene = load_layout(cfg.layout);
  const fs::path out = resolve_out_dir(cfg.out_dir);

  Rng prng(derive_seed(cfg.seeds.front(), 21));
  ExperimentConfig pc = cfg;
  pc.model = ModelKind::quasistatic;
  const auto planned = plan(scene, planner_config(pc), prng, std::nullopt, cfg.seeds.front());
  if (!planned.ok()) {
    std::fprintf(stderr, "reproduce: planning failed: %s\n", planned.error.c_str());
    return kExitPlanner;
  }
  manifest.emit_output(out / "trajectory_quasistatic.kv",
                       trajectory_to_kv(*planned.trajectory).serialize("planned trajectory"));

  const TrainResult trained = train_rearrange(
      desk_train_config(scene, 0.5, cfg.seeds.front(), "qs-leaper", cfg.episodes),
      &*planned.trajectory);
  Rng marker(derive_seed(cfg.seeds.front(), 99));
  save_checkpoint_file(out / "checkpoint_qs-leaper.bin", trained.agent, marker, manifest);
  manifest.emit_output(out / "curve_qs-leaper.csv", curve_csv({trained.curve}));

  const PhysicsParams nominal = nominal_params(scene);
  const DenseReference ref = densify_reference(scene, *planned.trajectory, nominal);
  const RearrangeEnvConfig env_cfg = env_config(cfg, scene);

  CsvBuilder csv({"controller", "layout", "trials", "successes", "success_rate", "seed"});
  const auto seed = cfg.seeds.front();

  Rng r1(derive_seed(seed, 42));
  const TrialStats open = run_controller_trials(make_open_loop(ref), env_cfg, cfg.trials, r1);
  csv.append_row({"open_loop", scene.name, std::to_string(open.trials),
                  std::to_string(open.successes), csv_num(open.success_rate),
                  std::to_string(seed)});

  std::string diag;
  const auto ilqr_ctl = make_ilqr_tracking(scene, ref, nominal, {}, 0.1, &diag);
  if (ilqr_ctl) {
    Rng r2(derive_seed(seed, 44));
    const TrialStats ilqr = run_controller_trials(*ilqr_ctl, env_cfg, cfg.trials, r2);
    csv.append_row({"ilqr", scene.name, std::to_string(ilqr.trials),
                    std::to_string(ilqr.successes), csv_num(ilqr.success_rate),
                    std::to_string(seed)});
  } else {
    std::fprintf(stderr, "reproduce: ilqr solve failed: %s\n", diag.c_str());
    manifest.set("ilqr_failure", diag);
    csv.append_row({"ilqr", scene.name, "0", "0", "0", std::to_string(seed)});
  }

  Rng r3(derive_seed(seed, 43));
  const double policy_rate = evaluate_rearrange(
      env_cfg,
      [&trained](const Observation& o, const Eigen::VectorXd& g) {
        Rng none(0);
        return trained.agent.act(o, g, false, none);
      },
      cfg.trials, r3);
  csv.append_row({"policy", scene.name, std::to_string(cfg.trials),
                  std::to_string(int(std::lround(policy_rate * cfg.trials))),
                  csv_num(policy_rate), std::to_string(seed)});

  manifest.emit_output(out / "controllers.csv", csv.str());
  std::printf("reproduce: open_loop %.2f, ilqr %s, policy %.2f\n", open.success_rate,
              ilqr_ctl ? "solved" : "failed", policy_rate);
  return kExitOk;
}

int run_reproduce(const ExperimentConfig& cfg, RunManifest& manifest) {
  if (cfg.preset == "fig4-desk" || cfg.preset == "fig6-desk")
    return reproduce_learning(cfg, manifest);
  if (cfg.preset == "table1-desk") return reproduce_controllers(cfg, manifest);
  if (cfg.preset == "fig3-desk") return run_cartpole_study(cfg, manifest);
  std::fprintf(stderr,
               "reproduce: unknown preset '%s' (fig4-desk|fig6-desk|table1-desk|fig3-desk)\n",
               cfg.preset.c_str());
  return kExitConfig;
}

int dispatch(const ExperimentConfig& cfg) {
  const fs::path out = resolve_out_dir(cfg.out_dir);
  RunManifest manifest(command_name(cfg.command), config_to_kv(cfg), cfg.seeds);
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    switch (cfg.command) {
      case Command::plan: code = run_plan(cfg, manifest); break;
      case Command::train: code = run_train(cfg, manifest); break;
      case Command::evaluate: code = run_evaluate(cfg, manifest); break;
      case Command::baseline: code = run_baseline(cfg, manifest); break;
      case Command::cartpole_study: code = run_cartpole_study(cfg, manifest); break;
      case Command::reproduce: code = run_reproduce(cfg, manifest); break;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: %s\n", command_name(cfg.command).c_str(), e.what());
    manifest.set("error", e.what());
    code = cfg.command == Command::plan ? kExitPlanner : kExitTraining;
  }
  manifest.add_timing("total",
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  manifest.set("exit_code", code);
  manifest.write(out / "manifest.json");
  return code;
}

struct CliOverrides {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> sets;

  void add(const std::string& key, const std::string& value) { sets.emplace_back(key, value); }
};

int run_command(const std::string& command, const CliOverrides& overrides) {
  KvFile merged;
  if (!overrides.config_file.empty()) {
    KvParseResult pr;
    merged = KvFile::parse(read_file(overrides.config_file), pr);
    if (!pr.ok()) {
      for (const auto& e : pr.errors)
        std::fprintf(stderr, "config %s: %s\n", overrides.config_file.c_str(), e.c_str());
      return kExitConfig;
    }
  }
  merged.set("command", command);
  for (const auto& [k, v] : overrides.sets) merged.set(k, v);

  const ConfigResult result = validate_config(merged.serialize());
  if (!result.ok()) {
    for (const auto& e : result.errors) std::fprintf(stderr, "config: %s\n", e.c_str());
    return kExitConfig;
  }
  return dispatch(*result.config);
}

}  // namespace
}  // namespace pushrl

int main(int argc, char** argv) {
  using namespace pushrl;
  CLI::App app{"Planar pushing rearrangement: physics-constrained planning, goal-conditioned "
               "off-policy learning with planned episodic resets, and tracking baselines"};
  app.require_subcommand(1);

  CliOverrides ov;
  std::string command;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ov.config_file, "kv config file; flags override its keys");
    sub->add_option_function<std::vector<std::string>>(
        "--set",
        [&](const std::vector<std::string>& kvs) {
          for (const auto& s : kvs) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw CLI::ValidationError("--set expects key=value");
            ov.add(s.substr(0, eq), s.substr(eq + 1));
          }
        },
        "extra key=value overrides (repeatable)");
    sub->add_option_function<std::string>(
        "--layout", [&](const std::string& v) { ov.add("layout", v); },
        "builtin layout (env1|env2|env3|reduced) or layout file path");
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& v) { ov.add("out", v); }, "output directory");
    sub->add_option_function<std::string>(
        "--seeds", [&](const std::string& v) { ov.add("seeds", v); },
        "seed list '1 2 3' or range '1..5'");
    sub->add_option_function<std::string>(
        "--seed", [&](const std::string& v) { ov.add("seeds", v); }, "single master seed");
  };

  CLI::App* plan_cmd = app.add_subcommand("plan", "plan a push trajectory with the tree search");
  add_common(plan_cmd);
  plan_cmd->add_option_function<std::string>(
      "--model", [&](const std::string& v) { ov.add("model", v); },
      "physics model: quasistatic|weld|dynamic");
  plan_cmd->callback([&] { command = "plan"; });

  CLI::App* train_cmd = app.add_subcommand("train", "train the goal-conditioned policy");
  add_common(train_cmd);
  train_cmd->add_option_function<std::string>(
      "--alpha", [&](const std::string& v) { ov.add("alpha", v); },
      "planned-reset probability");
  train_cmd->add_option_function<std::string>(
      "--trajectory", [&](const std::string& v) { ov.add("trajectory", v); },
      "trajectory file for planned resets");
  train_cmd->add_option_function<std::string>(
      "--episodes", [&](const std::string& v) { ov.add("episodes", v); }, "episode budget M");
  train_cmd->callback([&] { command = "train"; });

  CLI::App* eval_cmd = app.add_subcommand("evaluate", "evaluate a trained checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option_function<std::string>(
      "--checkpoint", [&](const std::string& v) { ov.add("checkpoint", v); }, "checkpoint file");
  eval_cmd->add_option_function<std::string>(
      "--trials", [&](const std::string& v) { ov.add("trials", v); }, "evaluation episodes");
  eval_cmd->callback([&] { command = "evaluate"; });

  CLI::App* base_cmd = app.add_subcommand("baseline", "run tracking-controller baselines");
  add_common(base_cmd);
  base_cmd->add_option_function<std::string>(
      "--trajectory", [&](const std::string& v) { ov.add("trajectory", v); },
      "trajectory file to track");
  base_cmd->add_option_function<std::string>(
      "--kind", [&](const std::string& v) { ov.add("baseline.kind", v); },
      "open_loop|velocity_feedback|ilqr|all");
  base_cmd->add_option_function<std::string>(
      "--checkpoint", [&](const std::string& v) { ov.add("checkpoint", v); },
      "optionally add a learned-policy row");
  base_cmd->add_option_function<std::string>(
      "--trials", [&](const std::string& v) { ov.add("trials", v); }, "trials per controller");
  base_cmd->callback([&] { command = "baseline"; });

  CLI::App* study_cmd =
      app.add_subcommand("cartpole-study", "reset-mixing study on the cartpole task");
  add_common(study_cmd);
  study_cmd->add_option_function<std::string>(
      "--grid", [&](const std::string& v) { ov.add("study.grid", v); },
      "semicolon-separated wO,wU,wS triples");
  study_cmd->add_option_function<std::string>(
      "--episodes", [&](const std::string& v) { ov.add("study.episodes", v); },
      "episodes per run");
  study_cmd->callback([&] { command = "cartpole-study"; });

  CLI::App* repro_cmd = app.add_subcommand("reproduce", "run a packaged experiment preset");
  add_common(repro_cmd);
  repro_cmd->add_option_function<std::string>(
      "--preset", [&](const std::string& v) { ov.add("preset", v); },
      "fig4-desk|fig6-desk|table1-desk|fig3-desk");
  repro_cmd->add_option_function<std::string>(
      "--episodes", [&](const std::string& v) { ov.add("episodes", v); }, "episode budget M");
  repro_cmd->add_option_function<std::string>(
      "--trials", [&](const std::string& v) { ov.add("trials", v); }, "controller trials");
  repro_cmd->callback([&] { command = "reproduce"; });

  CLI11_PARSE(app, argc, argv);
  return run_command(command, ov);
}
