#pragma once

// Seeded training and evaluation runs, paired coached/uncoached experiments,
// and their acceleration summaries.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "coaching/coach.hpp"
#include "coaching/environment.hpp"
#include "coaching/ppo.hpp"

namespace coaching {

struct StopRule {
  double target = 800.0;
  int win_streak = 5;
  int average_window = 10;
  int episode_cap = 2000;
  // Keep training after the win streak until the moving average crosses too.
  bool require_average_crossing = true;

  static StopRule defaults(EnvId id);
  void validate() const;
  bool operator==(const StopRule&) const = default;
};

struct RunConfig {
  EnvConfig env;
  CoachConfig coach;
  PpoConfig ppo;
  StopRule stop;

  static RunConfig defaults(EnvId id);
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

struct EpisodeLog {
  int episode = 0;           // 1-based
  double agent_score = 0.0;  // agent-visible rewards
  double env_score = 0.0;    // everything the environment emitted
  int steps = 0;             // environment steps, coach steps included
  int interventions = 0;
  int interventions_failed = 0;
};

struct TrainingCurve {
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::vector<EpisodeLog> episodes;
  double wall_seconds = 0.0;

  std::vector<double> agent_scores() const;
};

// Totals gathered independently of the episode logs.
struct RunAudit {
  std::size_t agent_decisions = 0;
  std::size_t transitions = 0;
  double visible_reward = 0.0;
  double hidden_reward = 0.0;
  double emitted_reward = 0.0;
};

struct TrainingResult {
  TrainingCurve curve;
  PpoAgent agent;
  std::vector<InterventionRecord> interventions;
  RunAudit audit;
  std::optional<int> win_streak_at;
  std::optional<int> average_crossing_at;
};

struct TrainingHooks {
  std::function<void(const CoachedStep&)> on_step;
  std::function<void(const EpisodeLog&)> on_episode;
  std::function<void(const RolloutBatch&)> on_update;
};

/// Collects episodes through coached_step and updates the agent every
/// `ppo.rollout_episodes` episodes until the stop rule is met. Deterministic
/// in (config, seed).
TrainingResult run_training(const RunConfig& cfg, std::uint64_t seed,
                            const TrainingHooks* hooks = nullptr);

/// Coach-free episodes under the deterministic (mean) policy.
std::vector<double> evaluate_scores(const PpoAgent& agent, const EnvConfig& env, int episodes,
                                    std::uint64_t seed);
double evaluate(const PpoAgent& agent, const EnvConfig& env, int episodes, std::uint64_t seed);

/// The coach alone from the start of each episode, regulating the monitored
/// quantity to zero.
std::vector<double> pid_baseline_scores(const EnvConfig& env, const CoachConfig& coach,
                                        int episodes, std::uint64_t seed);

struct ArmOutcome {
  std::optional<int> win_streak;
  std::optional<int> average_crossing;
  int episodes_run = 0;
  bool operator==(const ArmOutcome&) const = default;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  ArmOutcome coached;
  ArmOutcome uncoached;
};

struct MetricSummary {
  // (uncoached - coached) / uncoached in percent, finishing pairs only.
  std::vector<double> reductions_percent;
  std::optional<double> median_reduction_percent;
  int coached_fewer = 0;
  int uncoached_fewer = 0;
  int ties = 0;
  int did_not_finish = 0;

  int finishing_pairs() const { return coached_fewer + uncoached_fewer + ties; }
};

struct ExperimentSummary {
  std::vector<SeedOutcome> seeds;
  MetricSummary win_streak;
  MetricSummary average_crossing;
};

ExperimentSummary summarize(std::span<const SeedOutcome> outcomes);

struct PairedRun {
  std::uint64_t seed = 0;
  TrainingResult coached;
  TrainingResult uncoached;
};

struct ExperimentResult {
  ExperimentSummary summary;
  std::vector<PairedRun> runs;
};

/// Both arms for every seed, with up to `jobs` runs in flight. The coached
/// arm uses `base.coach` with enabled=true, the other arm disables it.
ExperimentResult paired_experiment(const RunConfig& base, std::span<const std::uint64_t> seeds,
                                   int jobs = 1);

// Columns: episode,agent_score,env_score,steps,interventions,interventions_failed
void write_curve_csv(const std::filesystem::path& path, const TrainingCurve& curve);
nlohmann::json summary_to_json(const ExperimentSummary& summary);

}  // namespace coaching
