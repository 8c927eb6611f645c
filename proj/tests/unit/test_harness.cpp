#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "coaching/harness.hpp"

using namespace coaching;

namespace {

RunConfig short_run(int cap) {
  RunConfig cfg = RunConfig::defaults(EnvId::InvertedPendulum);
  cfg.stop.episode_cap = cap;
  cfg.ppo.hidden_width = 16;
  return cfg;
}

SeedOutcome pair(std::uint64_t seed, std::optional<int> coached, std::optional<int> uncoached) {
  SeedOutcome o;
  o.seed = seed;
  o.coached = ArmOutcome{coached, coached, coached.value_or(2000)};
  o.uncoached = ArmOutcome{uncoached, uncoached, uncoached.value_or(2000)};
  return o;
}

}  // namespace

TEST_CASE("summary of identical arms") {
  const std::vector<SeedOutcome> o{pair(1, 150, 150), pair(2, 300, 300)};
  const ExperimentSummary s = summarize(o);
  CHECK(s.win_streak.median_reduction_percent == 0.0);
  CHECK(s.win_streak.ties == 2);
  CHECK(s.win_streak.coached_fewer == 0);
  CHECK(s.win_streak.uncoached_fewer == 0);
}

TEST_CASE("summary reproduces the 100 versus 160 arithmetic") {
  std::vector<SeedOutcome> o;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) o.push_back(pair(seed, 100, 160));
  const ExperimentSummary s = summarize(o);
  CHECK(s.win_streak.median_reduction_percent == 37.5);
  CHECK(s.average_crossing.median_reduction_percent == 37.5);
  CHECK(s.win_streak.coached_fewer == 10);
}

TEST_CASE("did-not-finish pairs are excluded from the median") {
  const std::vector<SeedOutcome> o{pair(1, 100, 200), pair(2, std::nullopt, 100),
                                   pair(3, 100, std::nullopt), pair(4, 150, 100)};
  const ExperimentSummary s = summarize(o);
  CHECK(s.win_streak.did_not_finish == 2);
  CHECK(s.win_streak.finishing_pairs() == 2);
  CHECK(s.win_streak.reductions_percent == std::vector<double>{50.0, -50.0});
  CHECK(s.win_streak.median_reduction_percent == 0.0);

  const std::vector<SeedOutcome> none{pair(1, std::nullopt, std::nullopt)};
  CHECK_FALSE(summarize(none).win_streak.median_reduction_percent.has_value());
}

TEST_CASE("training is deterministic in config and seed") {
  const RunConfig cfg = short_run(20);
  const TrainingResult a = run_training(cfg, 3);
  const TrainingResult b = run_training(cfg, 3);
  REQUIRE(a.curve.episodes.size() == b.curve.episodes.size());
  for (std::size_t i = 0; i < a.curve.episodes.size(); ++i) {
    CHECK(a.curve.episodes[i].agent_score == b.curve.episodes[i].agent_score);
    CHECK(a.curve.episodes[i].steps == b.curve.episodes[i].steps);
  }
  CHECK(a.agent.policy_params() == b.agent.policy_params());
  const TrainingResult c = run_training(cfg, 4);
  CHECK(c.agent.policy_params() != a.agent.policy_params());
}

TEST_CASE("coached run conserves reward and stores only agent decisions") {
  RunConfig cfg = short_run(30);
  std::size_t stored = 0;
  int coached_steps = 0;
  TrainingHooks hooks;
  hooks.on_update = [&](const RolloutBatch& b) { stored += b.transition_count(); };
  hooks.on_step = [&](const CoachedStep& s) {
    if (s.intervention) coached_steps += s.intervention->steps_used;
  };
  const TrainingResult r = run_training(cfg, 5, &hooks);
  CHECK(r.audit.transitions == r.audit.agent_decisions);
  CHECK(r.audit.visible_reward + r.audit.hidden_reward == r.audit.emitted_reward);
  CHECK_FALSE(r.interventions.empty());
  // Transitions of the trailing partial rollout are never handed to an update.
  CHECK(stored <= r.audit.transitions);

  std::size_t env_steps = 0;
  for (const EpisodeLog& e : r.curve.episodes) {
    env_steps += static_cast<std::size_t>(e.steps);
    CHECK(e.agent_score <= e.env_score);
  }
  CHECK(env_steps == r.audit.agent_decisions + static_cast<std::size_t>(coached_steps));
}

TEST_CASE("an infinite boundary reproduces the uncoached run bit for bit") {
  RunConfig off = short_run(20);
  off.coach.enabled = false;
  RunConfig inf = short_run(20);
  inf.coach.boundary = std::numeric_limits<double>::infinity();
  const TrainingResult a = run_training(off, 9);
  const TrainingResult b = run_training(inf, 9);
  REQUIRE(a.curve.episodes.size() == b.curve.episodes.size());
  for (std::size_t i = 0; i < a.curve.episodes.size(); ++i) {
    CHECK(a.curve.episodes[i].agent_score == b.curve.episodes[i].agent_score);
  }
  CHECK(a.agent.policy_params() == b.agent.policy_params());
  CHECK(a.agent.value_params() == b.agent.value_params());
  CHECK(b.interventions.empty());
}

TEST_CASE("evaluation ignores coach settings and is deterministic") {
  const RunConfig cfg = short_run(10);
  const TrainingResult r = run_training(cfg, 2);
  EnvConfig env = cfg.env;
  const auto a = evaluate_scores(r.agent, env, 5, 100);
  const auto b = evaluate_scores(r.agent, env, 5, 100);
  CHECK(a == b);
  CHECK(a.size() == 5);
}

TEST_CASE("an untrained agent scores poorly") {
  const RunConfig cfg = RunConfig::defaults(EnvId::InvertedPendulum);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const PpoAgent agent(observation_dim(EnvId::InvertedPendulum), cfg.ppo, seed);
    CHECK(evaluate(agent, cfg.env, 10, seed) < 100.0);
  }
}

TEST_CASE("per-episode reward conservation") {
  const RunConfig cfg = short_run(40);
  const TrainingResult r = run_training(cfg, 6);
  std::vector<double> hidden(r.curve.episodes.size() + 1, 0.0);
  std::vector<int> count(r.curve.episodes.size() + 1, 0), failed(r.curve.episodes.size() + 1, 0);
  for (const InterventionRecord& rec : r.interventions) {
    hidden[static_cast<std::size_t>(rec.episode)] += rec.hidden_reward;
    ++count[static_cast<std::size_t>(rec.episode)];
    failed[static_cast<std::size_t>(rec.episode)] += !rec.success;
  }
  for (const EpisodeLog& e : r.curve.episodes) {
    const auto i = static_cast<std::size_t>(e.episode);
    CHECK(e.env_score - e.agent_score == hidden[i]);
    CHECK(e.interventions == count[i]);
    CHECK(e.interventions_failed == failed[i]);
  }
}

TEST_CASE("the stop rule halts at the episode cap") {
  const RunConfig cfg = short_run(12);
  const TrainingResult r = run_training(cfg, 1);
  CHECK(r.curve.episodes.size() == 12);
  CHECK_FALSE(r.win_streak_at.has_value());
}

TEST_CASE("paired experiments do not depend on the job count") {
  const RunConfig cfg = short_run(10);
  const std::vector<std::uint64_t> seeds{1, 2};
  const ExperimentResult one = paired_experiment(cfg, seeds, 1);
  const ExperimentResult two = paired_experiment(cfg, seeds, 2);
  REQUIRE(one.runs.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(one.runs[i].seed == two.runs[i].seed);
    CHECK(one.runs[i].coached.agent.policy_params() == two.runs[i].coached.agent.policy_params());
    CHECK(one.runs[i].uncoached.agent.policy_params() ==
          two.runs[i].uncoached.agent.policy_params());
    CHECK(one.summary.seeds[i].coached == two.summary.seeds[i].coached);
  }
  CHECK(one.runs[0].uncoached.interventions.empty());
}

TEST_CASE("curve csv layout") {
  TrainingCurve curve;
  curve.episodes.push_back(EpisodeLog{1, 12.0, 20.0, 25, 2, 1});
  const auto path = std::filesystem::temp_directory_path() / "coaching_curve_test.csv";
  write_curve_csv(path, curve);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "episode,agent_score,env_score,steps,interventions,interventions_failed");
  CHECK(row.rfind("1,12,20,25,2,1", 0) == 0);
  std::filesystem::remove(path);
}
