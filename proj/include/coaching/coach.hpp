#pragma once

// Controller-based coaching. When the watched quantity leaves the critical
// region the PID coach takes over the environment until the quantity is back
// on the boundary. The agent only ever receives AgentTransitions, which carry
// nothing about the intervention: the coach's steps and rewards stay in the
// InterventionRecord.

#include <optional>
#include <string_view>
#include <vector>

#include "coaching/environment.hpp"
#include "coaching/pid.hpp"

namespace coaching {

enum class MonitoredQuantity {
  PoleAngularVelocity,  // theta' of the cart-pole
  LowerLinkAngle,       // theta1 of the double pendulum
};

std::string_view to_string(MonitoredQuantity q);
MonitoredQuantity monitored_quantity_from_string(std::string_view name);

struct CoachConfig {
  MonitoredQuantity monitor = MonitoredQuantity::PoleAngularVelocity;
  double boundary = 0.4;  // may be +inf
  int max_intervention_steps = 50;
  PidGains gains;
  bool enabled = true;

  static CoachConfig defaults(EnvId id);
  void validate() const;
  bool operator==(const CoachConfig&) const = default;
};

struct InterventionRecord {
  int episode = 0;
  int trigger_step = 0;  // agent decision index (0-based) that triggered it
  int steps_used = 0;
  bool success = false;  // ended with |monitor| <= boundary
  double hidden_reward = 0.0;
  bool terminal_during = false;
  bool truncated_during = false;
  std::vector<double> forces;  // coach forces in application order
};

struct AgentTransition {
  Observation obs;
  double action = 0.0;
  double reward = 0.0;
  Observation next_obs;
  bool terminal = false;
  bool truncated = false;
};

double monitored_value(const PhysicsState& state, MonitoredQuantity q);

/// |monitor| > boundary. Throws std::logic_error for a disabled coach.
bool is_critical(const PhysicsState& state, const CoachConfig& cfg);

/// Runs the PID coach from a critical state. Throws std::logic_error when
/// the current state is not critical.
InterventionRecord intervene(Environment& env, const CoachConfig& cfg);

struct CoachedStep {
  AgentTransition transition;
  std::optional<InterventionRecord> intervention;
};

/// Applies the agent's action, then lets the coach take over if the result
/// is critical. The returned transition links the pre-action observation to
/// the post-intervention one and carries only the agent's own reward.
CoachedStep coached_step(Environment& env, double action, const CoachConfig& cfg);

}  // namespace coaching
