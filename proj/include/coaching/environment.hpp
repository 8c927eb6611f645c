#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coaching/dynamics.hpp"

namespace coaching {

enum class EnvId { InvertedPendulum, DoublePendulum };

std::string_view to_string(EnvId id);
/// Accepts "inverted_pendulum" or "double_pendulum".
EnvId env_id_from_string(std::string_view name);

// Inverted pendulum: [x, x', theta, theta'].
// Double pendulum: [x, sin t1, sin t2, cos t1, cos t2, x', t1', t2', fx, ft1, ft2];
// the trailing constraint-force slots are always zero.
using Observation = std::vector<double>;

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;
};

struct EnvConfig {
  EnvId id = EnvId::InvertedPendulum;
  int max_steps = 1000;
  double init_noise = 0.01;
  // Inverted pendulum: terminal when |theta| exceeds this.
  double angle_limit = 0.2;
  // Double pendulum: terminal when the tip drops below this height.
  double min_tip_height = 1.0;
  double alive_reward = 10.0;
  double cart_velocity_penalty = 0.01;
  double angular_velocity_penalty = 0.05;

  static EnvConfig defaults(EnvId id);
  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

using PhysicsState = std::variant<CartPoleState, DoubleCartPoleState>;

std::size_t observation_dim(EnvId id);
Observation observe(const PhysicsState& state);

/// One episode at a time over a single mechanism. Copyable; a copy is an
/// independent clone including step count and emitted-reward tally.
class Environment {
 public:
  explicit Environment(EnvConfig config);
  Environment(EnvConfig config, MechanismParams params);

  /// Upright equilibrium plus uniform(-init_noise, init_noise) on every
  /// coordinate, drawn from a counter-based stream keyed by `seed`.
  Observation reset(std::uint64_t seed);

  /// Clamps the action to the force limit and advances one RK4 step.
  /// Throws std::logic_error when the episode is already over.
  StepResult step(double action);

  Observation observation() const { return observe(state_); }
  const PhysicsState& state() const { return state_; }
  /// Replaces the physics state without touching the step counter.
  void set_state(const PhysicsState& state);

  const EnvConfig& config() const { return config_; }
  const MechanismParams& params() const { return params_; }
  std::size_t observation_dim() const { return coaching::observation_dim(config_.id); }
  int steps_taken() const { return steps_; }
  bool done() const { return done_; }
  /// Sum of every reward returned by step() since the last reset.
  double reward_emitted() const { return reward_emitted_; }

 private:
  EnvConfig config_;
  MechanismParams params_;
  PhysicsState state_;
  int steps_ = 0;
  bool done_ = false;
  double reward_emitted_ = 0.0;
};

double episode_score(std::span<const double> rewards);

}  // namespace coaching
