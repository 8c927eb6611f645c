#include "coaching/harness.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "coaching/config.hpp"
#include "coaching/metrics.hpp"

namespace coaching {

StopRule StopRule::defaults(EnvId id) {
  StopRule s;
  if (id == EnvId::InvertedPendulum) {
    s.target = 800.0;
    s.average_window = 10;
    s.episode_cap = 2000;
  } else {
    s.target = 5500.0;
    s.average_window = 100;
    s.episode_cap = 5000;
  }
  return s;
}

void StopRule::validate() const {
  if (!std::isfinite(target)) throw std::invalid_argument("stop.target must be finite");
  if (win_streak < 1) throw std::invalid_argument("stop.win_streak must be at least 1");
  if (average_window < 1) throw std::invalid_argument("stop.average_window must be at least 1");
  if (episode_cap < 1) throw std::invalid_argument("stop.episode_cap must be at least 1");
}

RunConfig RunConfig::defaults(EnvId id) {
  RunConfig c;
  c.env = EnvConfig::defaults(id);
  c.coach = CoachConfig::defaults(id);
  c.stop = StopRule::defaults(id);
  return c;
}

void RunConfig::validate() const {
  env.validate();
  coach.validate();
  ppo.validate();
  stop.validate();
  // Throws if the monitor does not belong to this mechanism.
  (void)monitored_value(Environment(env).state(), coach.monitor);
}

std::vector<double> TrainingCurve::agent_scores() const {
  std::vector<double> s;
  s.reserve(episodes.size());
  for (const auto& e : episodes) s.push_back(e.agent_score);
  return s;
}

TrainingResult run_training(const RunConfig& cfg, std::uint64_t seed, const TrainingHooks* hooks) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  Environment env(cfg.env);
  TrainingResult result{TrainingCurve{}, PpoAgent(env.observation_dim(), cfg.ppo, seed), {}, {}, {},
                        {}};
  result.curve.config_fingerprint = fingerprint(cfg);
  result.curve.seed = seed;
  PpoAgent& agent = result.agent;
  CounterRng action_rng(derive_key(seed, Stream::ActionNoise));

  RolloutBatch batch;
  std::vector<double> scores;
  for (int episode = 1; episode <= cfg.stop.episode_cap; ++episode) {
    env.reset(derive_key(seed, Stream::EnvReset, static_cast<std::uint64_t>(episode)));
    RolloutEpisode rollout;
    EpisodeLog log;
    log.episode = episode;
    double hidden = 0.0;
    while (!env.done()) {
      const Observation obs = env.observation();
      const ActResult a = agent.act(obs, action_rng);
      CoachedStep step = coached_step(env, a.action, cfg.coach);
      ++result.audit.agent_decisions;
      if (hooks && hooks->on_step) hooks->on_step(step);
      log.agent_score += step.transition.reward;
      if (step.intervention) {
        InterventionRecord& rec = *step.intervention;
        rec.episode = episode;
        rec.trigger_step = static_cast<int>(rollout.transitions.size());
        ++log.interventions;
        if (!rec.success) ++log.interventions_failed;
        hidden += rec.hidden_reward;
        result.interventions.push_back(std::move(rec));
      }
      rollout.transitions.push_back(std::move(step.transition));
    }
    log.env_score = env.reward_emitted();
    log.steps = env.steps_taken();
    result.audit.transitions += rollout.transitions.size();
    result.audit.visible_reward += log.agent_score;
    result.audit.hidden_reward += hidden;
    result.audit.emitted_reward += log.env_score;
    result.curve.episodes.push_back(log);
    scores.push_back(log.agent_score);
    if (hooks && hooks->on_episode) hooks->on_episode(log);

    batch.episodes.push_back(std::move(rollout));
    if (static_cast<int>(batch.episodes.size()) == cfg.ppo.rollout_episodes) {
      if (hooks && hooks->on_update) hooks->on_update(batch);
      agent.update(batch);
      batch = RolloutBatch{};
    }

    // Both metrics only ever look at a prefix, so a found index is final.
    if (!result.win_streak_at) {
      result.win_streak_at = win_streak_episode(scores, cfg.stop.target, cfg.stop.win_streak);
    }
    if (!result.average_crossing_at && episode >= cfg.stop.average_window) {
      const std::span<const double> all(scores);
      const auto tail = all.last(static_cast<std::size_t>(cfg.stop.average_window));
      if (moving_average_crossing(tail, cfg.stop.target, cfg.stop.average_window)) {
        result.average_crossing_at = episode;
      }
    }
    const bool averaged = result.average_crossing_at || !cfg.stop.require_average_crossing;
    if (result.win_streak_at && averaged) break;
  }

  result.curve.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::vector<double> evaluate_scores(const PpoAgent& agent, const EnvConfig& env_cfg, int episodes,
                                    std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be at least 1");
  Environment env(env_cfg);
  std::vector<double> scores;
  for (int i = 0; i < episodes; ++i) {
    env.reset(derive_key(seed, Stream::EvalReset, static_cast<std::uint64_t>(i)));
    while (!env.done()) env.step(agent.act_mean(env.observation()));
    scores.push_back(env.reward_emitted());
  }
  return scores;
}

double evaluate(const PpoAgent& agent, const EnvConfig& env, int episodes, std::uint64_t seed) {
  const auto s = evaluate_scores(agent, env, episodes, seed);
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

std::vector<double> pid_baseline_scores(const EnvConfig& env_cfg, const CoachConfig& coach,
                                        int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("pid_baseline: episodes must be at least 1");
  coach.gains.validate();
  Environment env(env_cfg);
  std::vector<double> scores;
  for (int i = 0; i < episodes; ++i) {
    env.reset(derive_key(seed, Stream::EvalReset, static_cast<std::uint64_t>(i)));
    PidMemory memory;
    while (!env.done()) {
      const double error = -monitored_value(env.state(), coach.monitor);
      const PidOutput out =
          pid_update(memory, error, env.params().dt, coach.gains, env.params().force_limit);
      memory = out.memory;
      env.step(out.control);
    }
    scores.push_back(env.reward_emitted());
  }
  return scores;
}

namespace {

void tally(MetricSummary& m, std::optional<int> coached, std::optional<int> uncoached) {
  if (!coached || !uncoached) {
    ++m.did_not_finish;
    return;
  }
  m.reductions_percent.push_back(100.0 * (*uncoached - *coached) / static_cast<double>(*uncoached));
  if (*coached < *uncoached) {
    ++m.coached_fewer;
  } else if (*coached > *uncoached) {
    ++m.uncoached_fewer;
  } else {
    ++m.ties;
  }
}

}  // namespace

ExperimentSummary summarize(std::span<const SeedOutcome> outcomes) {
  ExperimentSummary s;
  s.seeds.assign(outcomes.begin(), outcomes.end());
  for (const auto& o : outcomes) {
    tally(s.win_streak, o.coached.win_streak, o.uncoached.win_streak);
    tally(s.average_crossing, o.coached.average_crossing, o.uncoached.average_crossing);
  }
  for (MetricSummary* m : {&s.win_streak, &s.average_crossing}) {
    if (!m->reductions_percent.empty()) m->median_reduction_percent = median(m->reductions_percent);
  }
  return s;
}

ExperimentResult paired_experiment(const RunConfig& base, std::span<const std::uint64_t> seeds,
                                   int jobs) {
  if (seeds.size() < 2) throw std::invalid_argument("paired_experiment: needs at least 2 seeds");
  if (jobs < 1) throw std::invalid_argument("paired_experiment: jobs must be at least 1");
  RunConfig coached = base;
  coached.coach.enabled = true;
  RunConfig uncoached = base;
  uncoached.coach.enabled = false;
  coached.validate();

  const auto tasks = static_cast<std::int64_t>(2 * seeds.size());
  std::vector<std::optional<TrainingResult>> results(static_cast<std::size_t>(tasks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(tasks));
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (std::int64_t t = 0; t < tasks; ++t) {
    try {
      const auto i = static_cast<std::size_t>(t / 2);
      results[static_cast<std::size_t>(t)] =
          run_training(t % 2 == 0 ? coached : uncoached, seeds[i]);
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult out;
  std::vector<SeedOutcome> outcomes;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    TrainingResult& c = *results[2 * i];
    TrainingResult& u = *results[2 * i + 1];
    SeedOutcome o;
    o.seed = seeds[i];
    o.coached = {c.win_streak_at, c.average_crossing_at, static_cast<int>(c.curve.episodes.size())};
    o.uncoached = {u.win_streak_at, u.average_crossing_at,
                   static_cast<int>(u.curve.episodes.size())};
    outcomes.push_back(o);
    out.runs.push_back(PairedRun{seeds[i], std::move(c), std::move(u)});
  }
  out.summary = summarize(outcomes);
  return out;
}

void write_curve_csv(const std::filesystem::path& path, const TrainingCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "episode,agent_score,env_score,steps,interventions,interventions_failed\n";
  for (const auto& e : curve.episodes) {
    out << e.episode << ',' << e.agent_score << ',' << e.env_score << ',' << e.steps << ','
        << e.interventions << ',' << e.interventions_failed << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

nlohmann::json optional_json(const std::optional<int>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json metric_json(const MetricSummary& m) {
  return {
      {"reductions_percent", m.reductions_percent},
      {"median_reduction_percent",
       m.median_reduction_percent ? nlohmann::json(*m.median_reduction_percent)
                                  : nlohmann::json(nullptr)},
      {"sign_test",
       {{"coached_fewer", m.coached_fewer},
        {"uncoached_fewer", m.uncoached_fewer},
        {"ties", m.ties}}},
      {"finishing_pairs", m.finishing_pairs()},
      {"did_not_finish", m.did_not_finish},
  };
}

nlohmann::json arm_json(const ArmOutcome& a) {
  return {{"win_streak_episode", optional_json(a.win_streak)},
          {"average_crossing_episode", optional_json(a.average_crossing)},
          {"episodes_run", a.episodes_run}};
}

}  // namespace

nlohmann::json summary_to_json(const ExperimentSummary& summary) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& o : summary.seeds) {
    seeds.push_back(
        {{"seed", o.seed}, {"coached", arm_json(o.coached)}, {"uncoached", arm_json(o.uncoached)}});
  }
  return {{"per_seed", seeds},
          {"win_streak", metric_json(summary.win_streak)},
          {"average_crossing", metric_json(summary.average_crossing)}};
}

}  // namespace coaching
