#pragma once

// Experiment configuration: one JSON document with an object per module.
//
//   {
//     "name": "inverted_pendulum",
//     "env":   {"id": "inverted_pendulum", "init_noise": 0.01, ...},
//     "coach": {"enabled": true, "boundary": 0.4, "kp": 3.0, ...},
//     "ppo":   {"gamma": 0.99, ...},
//     "stop":  {"target": 800, "win_streak": 5, ...},
//     "seeds": [1, 2, 3],
//     "output_dir": "out"
//   }
//
// Only env.id is required. Everything else falls back to defaults chosen by
// the environment id. Unknown keys are errors. The boundary accepts the
// string "inf" to disable intervention while keeping the coach wrapper.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coaching/harness.hpp"
#include "json.hpp"

namespace coaching {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name;
  RunConfig run;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  int eval_episodes = 10;

  static ExperimentConfig defaults(EnvId id);
  /// Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
/// `source` names the document in diagnostics.
ExperimentConfig parse_config_text(std::string_view text, const std::string& source = "<config>");
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Every field, defaults included.
nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

/// Stable 16-hex-digit digest of the materialized run configuration.
std::string fingerprint(const RunConfig& cfg);

}  // namespace coaching
