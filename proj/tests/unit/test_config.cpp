#include "doctest.h"

#include <cmath>
#include <string>

#include "coaching/config.hpp"

using namespace coaching;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "test.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("a minimal config takes environment defaults") {
  const ExperimentConfig cfg = parse_config_text(R"({"env": {"id": "double_pendulum"}})");
  CHECK(cfg.run == RunConfig::defaults(EnvId::DoublePendulum));
  CHECK(cfg.run.coach.boundary == 0.2);
  CHECK(cfg.run.coach.monitor == MonitoredQuantity::LowerLinkAngle);
  CHECK(cfg.run.stop.target == 5500.0);
  CHECK(cfg.run.stop.average_window == 100);
  CHECK(cfg.seeds.size() == 10);

  const ExperimentConfig ip = parse_config_text(R"({"env": {"id": "inverted_pendulum"}})");
  CHECK(ip.run.coach.boundary == 0.4);
  CHECK(ip.run.stop.target == 800.0);
  CHECK(ip.run.coach.gains == PidGains{3.0, 0.5, 0.1});
}

TEST_CASE("overrides are applied") {
  const ExperimentConfig cfg = parse_config_text(R"({
    "name": "x", "env": {"id": "inverted_pendulum", "init_noise": 0.0},
    "coach": {"boundary": 0.5, "kp": 2.0}, "ppo": {"learning_rate": 0.001},
    "stop": {"episode_cap": 50}, "seeds": [7, 8], "output_dir": "o", "eval_episodes": 3})");
  CHECK(cfg.name == "x");
  CHECK(cfg.run.env.init_noise == 0.0);
  CHECK(cfg.run.coach.boundary == 0.5);
  CHECK(cfg.run.coach.gains.kp == 2.0);
  CHECK(cfg.run.coach.gains.ki == 0.5);
  CHECK(cfg.run.ppo.learning_rate == 0.001);
  CHECK(cfg.run.stop.episode_cap == 50);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8});
  CHECK(cfg.output_dir == "o");
  CHECK(cfg.eval_episodes == 3);
}

TEST_CASE("invalid values name the field") {
  const std::string e =
      error_of(R"({"env": {"id": "inverted_pendulum"}, "coach": {"boundary": -0.4}})");
  CHECK(e.find("coach.boundary") != std::string::npos);
  CHECK(error_of(R"({"env": {"id": "inverted_pendulum"}, "ppo": {"gamma": 1.5}})")
            .find("ppo.gamma") != std::string::npos);
  CHECK(error_of(R"({"env": {"id": "inverted_pendulum"}, "seeds": []})").find("seeds") !=
        std::string::npos);
  CHECK(error_of(R"({"env": {"id": "inverted_pendulum"}, "env2": 1})").find("env2") !=
        std::string::npos);
  CHECK(error_of(R"({"env": {"id": "inverted_pendulum", "gravity": 1}})").find("gravity") !=
        std::string::npos);
  CHECK(error_of(R"({"env": {"id": "hopper"}})").find("hopper") != std::string::npos);
  CHECK_FALSE(error_of(R"({"coach": {}})").empty());
  CHECK(error_of(R"({"env": {"id": "inverted_pendulum"}, "coach": {"kp": "three"}})")
            .find("coach.kp") != std::string::npos);
}

TEST_CASE("malformed json reports the source") {
  const std::string e = error_of("{\"env\": ");
  CHECK(e.find("test.json") != std::string::npos);
}

TEST_CASE("boundary accepts inf") {
  const ExperimentConfig cfg =
      parse_config_text(R"({"env": {"id": "inverted_pendulum"}, "coach": {"boundary": "inf"}})");
  CHECK(std::isinf(cfg.run.coach.boundary));
  const ExperimentConfig back = config_from_json(to_json(cfg));
  CHECK(std::isinf(back.run.coach.boundary));
}

TEST_CASE("json round trip and fingerprint") {
  ExperimentConfig cfg = parse_config_text(R"({"env": {"id": "inverted_pendulum"}})");
  cfg.run.ppo.epochs = 4;
  const ExperimentConfig back = config_from_json(to_json(cfg));
  CHECK(back == cfg);
  CHECK(fingerprint(back.run) == fingerprint(cfg.run));
  CHECK(fingerprint(cfg.run).size() == 16);
  cfg.run.coach.gains.kd = 0.2;
  CHECK(fingerprint(back.run) != fingerprint(cfg.run));
}
