#include "coaching/coach.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace coaching {

std::string_view to_string(MonitoredQuantity q) {
  switch (q) {
    case MonitoredQuantity::PoleAngularVelocity:
      return "pole_angular_velocity";
    case MonitoredQuantity::LowerLinkAngle:
      return "lower_link_angle";
  }
  return "unknown";
}

MonitoredQuantity monitored_quantity_from_string(std::string_view name) {
  if (name == "pole_angular_velocity") return MonitoredQuantity::PoleAngularVelocity;
  if (name == "lower_link_angle") return MonitoredQuantity::LowerLinkAngle;
  throw std::invalid_argument("unknown monitored quantity '" + std::string(name) + "'");
}

CoachConfig CoachConfig::defaults(EnvId id) {
  CoachConfig c;
  if (id == EnvId::InvertedPendulum) {
    c.monitor = MonitoredQuantity::PoleAngularVelocity;
    c.boundary = 0.4;
  } else {
    c.monitor = MonitoredQuantity::LowerLinkAngle;
    c.boundary = 0.2;
  }
  return c;
}

void CoachConfig::validate() const {
  if (std::isnan(boundary) || !(boundary > 0.0)) {
    throw std::invalid_argument("coach.boundary must be positive");
  }
  if (max_intervention_steps < 1) {
    throw std::invalid_argument("coach.max_intervention_steps must be at least 1");
  }
  gains.validate();
}

double monitored_value(const PhysicsState& state, MonitoredQuantity q) {
  switch (q) {
    case MonitoredQuantity::PoleAngularVelocity:
      if (const auto* s = std::get_if<CartPoleState>(&state)) return s->theta_dot;
      break;
    case MonitoredQuantity::LowerLinkAngle:
      if (const auto* s = std::get_if<DoubleCartPoleState>(&state)) return s->theta1;
      break;
  }
  throw std::invalid_argument("monitored quantity does not exist on this mechanism");
}

bool is_critical(const PhysicsState& state, const CoachConfig& cfg) {
  if (!cfg.enabled) throw std::logic_error("is_critical: coach is disabled");
  return std::abs(monitored_value(state, cfg.monitor)) > cfg.boundary;
}

InterventionRecord intervene(Environment& env, const CoachConfig& cfg) {
  if (!is_critical(env.state(), cfg)) {
    throw std::logic_error("intervene: state is inside the critical region");
  }
  InterventionRecord rec;
  PidMemory memory;
  const double dt = env.params().dt;
  while (rec.steps_used < cfg.max_intervention_steps) {
    const double m = monitored_value(env.state(), cfg.monitor);
    // Setpoint is the boundary on the side the quantity escaped through.
    const double error = std::copysign(cfg.boundary, m) - m;
    const PidOutput out = pid_update(memory, error, dt, cfg.gains, env.params().force_limit);
    memory = out.memory;

    const StepResult r = env.step(out.control);
    ++rec.steps_used;
    rec.hidden_reward += r.reward;
    rec.forces.push_back(out.control);
    if (r.terminal || r.truncated) {
      rec.terminal_during = r.terminal;
      rec.truncated_during = r.truncated;
      break;
    }
    if (!is_critical(env.state(), cfg)) {
      rec.success = true;
      break;
    }
  }
  return rec;
}

CoachedStep coached_step(Environment& env, double action, const CoachConfig& cfg) {
  CoachedStep out;
  AgentTransition& t = out.transition;
  t.obs = env.observation();
  t.action = action;
  StepResult r = env.step(action);
  t.reward = r.reward;
  t.terminal = r.terminal;
  t.truncated = r.truncated;
  if (cfg.enabled && !r.terminal && !r.truncated && is_critical(env.state(), cfg)) {
    out.intervention = intervene(env, cfg);
    t.terminal = out.intervention->terminal_during;
    t.truncated = out.intervention->truncated_during;
    t.next_obs = env.observation();
  } else {
    t.next_obs = std::move(r.observation);
  }
  return out;
}

}  // namespace coaching
