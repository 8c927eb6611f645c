#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coaching/checkpoint.hpp"
#include "coaching/config.hpp"
#include "coaching/harness.hpp"

namespace coaching::cli {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config_path;
  std::optional<int> seed_count;
  std::vector<std::uint64_t> seed_list;
  int jobs = 1;
  std::optional<std::string> out_dir;
  bool no_coach = false;
  std::optional<int> episode_cap;
};

void add_common(CLI::App& sub, CommonOptions& o) {
  sub.add_option("--config", o.config_path, "Experiment config (JSON)")->required();
  sub.add_option("--seeds", o.seed_count, "Use seeds 1..N")->check(CLI::PositiveNumber);
  sub.add_option("--seed-list", o.seed_list, "Explicit comma-separated seeds")->delimiter(',');
  sub.add_option("--jobs", o.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sub.add_option("--out", o.out_dir, "Output directory");
  sub.add_flag("--no-coach", o.no_coach, "Force-disable the coach");
  sub.add_option("--episode-cap", o.episode_cap, "Override stop.episode_cap")
      ->check(CLI::PositiveNumber);
}

ExperimentConfig load(const CommonOptions& o) {
  ExperimentConfig cfg = parse_config(o.config_path);
  if (o.seed_count && !o.seed_list.empty()) {
    throw ConfigError("--seeds and --seed-list are mutually exclusive");
  }
  if (o.seed_count) {
    cfg.seeds.clear();
    for (int s = 1; s <= *o.seed_count; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (!o.seed_list.empty()) cfg.seeds = o.seed_list;
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (o.no_coach) cfg.run.coach.enabled = false;
  if (o.episode_cap) cfg.run.stop.episode_cap = *o.episode_cap;
  cfg.validate();
  return cfg;
}

std::string opt_str(const std::optional<int>& v) { return v ? std::to_string(*v) : "none"; }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

// out/<name>/<seed>/<arm>/{run.csv, config.json, checkpoint}
fs::path write_run(const ExperimentConfig& base, const RunConfig& run, std::uint64_t seed,
                   const TrainingResult& result) {
  const fs::path dir = fs::path(base.output_dir) / base.name / std::to_string(seed) /
                       (run.coach.enabled ? "coached" : "uncoached");
  fs::create_directories(dir);
  ExperimentConfig echo = base;
  echo.run = run;
  echo.seeds = {seed};
  write_json(dir / "config.json", to_json(echo));
  write_curve_csv(dir / "run.csv", result.curve);
  save_checkpoint(dir / "checkpoint", result.agent);
  return dir;
}

int cmd_train(const CommonOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = load(o);
  const std::uint64_t seed = cfg.seeds.front();
  const TrainingResult result = run_training(cfg.run, seed);
  const fs::path dir = write_run(cfg, cfg.run, seed, result);
  const double eval = evaluate(result.agent, cfg.run.env, cfg.eval_episodes, seed);
  out << "run_dir=" << dir.string() << '\n'
      << "seed=" << seed << '\n'
      << "coach=" << (cfg.run.coach.enabled ? "on" : "off") << '\n'
      << "episodes=" << result.curve.episodes.size() << '\n'
      << "win_streak_episode=" << opt_str(result.win_streak_at) << '\n'
      << "average_crossing_episode=" << opt_str(result.average_crossing_at) << '\n'
      << "interventions=" << result.interventions.size() << '\n'
      << "evaluation_mean=" << eval << '\n';
  return kExitOk;
}

int cmd_compare(const CommonOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = load(o);
  const ExperimentResult res = paired_experiment(cfg.run, cfg.seeds, o.jobs);

  nlohmann::json summary = summary_to_json(res.summary);
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const PairedRun& pr = res.runs[i];
    for (const TrainingResult* r : {&pr.coached, &pr.uncoached}) {
      RunConfig run = cfg.run;
      run.coach.enabled = (r == &pr.coached);
      write_run(cfg, run, pr.seed, *r);
      const double eval = evaluate(r->agent, cfg.run.env, cfg.eval_episodes, pr.seed);
      summary["per_seed"][i][run.coach.enabled ? "coached" : "uncoached"]["evaluation_mean"] = eval;
    }
  }
  summary["config"] = to_json(cfg);
  summary["seeds"] = cfg.seeds;
  const fs::path root = fs::path(cfg.output_dir) / cfg.name;
  fs::create_directories(root);
  write_json(root / "summary.json", summary);

  auto line = [&](const char* name, const MetricSummary& m) {
    out << name << ": median_reduction_percent="
        << (m.median_reduction_percent ? std::to_string(*m.median_reduction_percent) : "none")
        << " coached_fewer=" << m.coached_fewer << " uncoached_fewer=" << m.uncoached_fewer
        << " ties=" << m.ties << " did_not_finish=" << m.did_not_finish << '\n';
  };
  line("win_streak", res.summary.win_streak);
  line("average_crossing", res.summary.average_crossing);
  out << "summary=" << (root / "summary.json").string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoint, int episodes,
                 std::uint64_t seed, std::ostream& out) {
  const ExperimentConfig cfg = load(o);
  const PpoAgent agent = load_checkpoint(checkpoint, cfg.run.ppo);
  if (agent.obs_dim() != observation_dim(cfg.run.env.id)) {
    throw ConfigError("checkpoint observation size does not match env.id");
  }
  const auto scores = evaluate_scores(agent, cfg.run.env, episodes, seed);
  out << "episodes=" << scores.size() << '\n' << "evaluation_mean=" << mean_of(scores) << '\n';
  return kExitOk;
}

int cmd_pid_baseline(const CommonOptions& o, int episodes, std::uint64_t seed, std::ostream& out) {
  const ExperimentConfig cfg = load(o);
  const auto scores = pid_baseline_scores(cfg.run.env, cfg.run.coach, episodes, seed);
  out << "episodes=" << scores.size() << '\n'
      << "pid_mean_score=" << mean_of(scores) << '\n'
      << "pid_min_score=" << *std::min_element(scores.begin(), scores.end()) << '\n'
      << "pid_max_score=" << *std::max_element(scores.begin(), scores.end()) << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Controller-based coaching for PPO on inverted-pendulum tasks", "coaching"};
  app.require_subcommand(1);

  CommonOptions train_opts, compare_opts, eval_opts, pid_opts;
  auto* train = app.add_subcommand("train", "Train one agent (first seed)");
  add_common(*train, train_opts);
  auto* compare = app.add_subcommand("compare", "Paired coached vs uncoached runs over seeds");
  add_common(*compare, compare_opts);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint without the coach");
  add_common(*evaluate_cmd, eval_opts);
  std::string checkpoint;
  int eval_episodes = 10;
  std::uint64_t eval_seed = 0;
  evaluate_cmd->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate_cmd->add_option("--episodes", eval_episodes, "Episodes")->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--seed", eval_seed, "Evaluation seed");

  auto* pid = app.add_subcommand("pid-baseline", "Score the PID coach on its own");
  add_common(*pid, pid_opts);
  int pid_episodes = 20;
  std::uint64_t pid_seed = 0;
  pid->add_option("--episodes", pid_episodes, "Episodes")->check(CLI::PositiveNumber);
  pid->add_option("--seed", pid_seed, "Evaluation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfigError;
  }

  try {
    if (*train) return cmd_train(train_opts, out);
    if (*compare) return cmd_compare(compare_opts, out);
    if (*evaluate_cmd) return cmd_evaluate(eval_opts, checkpoint, eval_episodes, eval_seed, out);
    if (*pid) return cmd_pid_baseline(pid_opts, pid_episodes, pid_seed, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  err << app.help();
  return kExitConfigError;
}

}  // namespace coaching::cli
