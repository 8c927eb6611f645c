#include "coaching/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "coaching/rng.hpp"

namespace coaching {

std::string_view to_string(EnvId id) {
  switch (id) {
    case EnvId::InvertedPendulum:
      return "inverted_pendulum";
    case EnvId::DoublePendulum:
      return "double_pendulum";
  }
  return "unknown";
}

EnvId env_id_from_string(std::string_view name) {
  if (name == "inverted_pendulum") return EnvId::InvertedPendulum;
  if (name == "double_pendulum") return EnvId::DoublePendulum;
  throw std::invalid_argument("unknown environment id '" + std::string(name) + "'");
}

EnvConfig EnvConfig::defaults(EnvId id) {
  EnvConfig c;
  c.id = id;
  return c;
}

void EnvConfig::validate() const {
  if (max_steps != 1000) throw std::invalid_argument("env.max_steps must be 1000");
  if (!std::isfinite(init_noise) || init_noise < 0.0) {
    throw std::invalid_argument("env.init_noise must be non-negative");
  }
  if (!(angle_limit > 0.0)) throw std::invalid_argument("env.angle_limit must be positive");
  if (!(min_tip_height > 0.0)) throw std::invalid_argument("env.min_tip_height must be positive");
  if (!std::isfinite(alive_reward)) throw std::invalid_argument("env.alive_reward must be finite");
  if (!(cart_velocity_penalty >= 0.0) || !(angular_velocity_penalty >= 0.0)) {
    throw std::invalid_argument("env reward penalties must be non-negative");
  }
}

std::size_t observation_dim(EnvId id) { return id == EnvId::InvertedPendulum ? 4 : 11; }

Observation observe(const PhysicsState& state) {
  if (const auto* s = std::get_if<CartPoleState>(&state)) {
    return {s->x, s->x_dot, s->theta, s->theta_dot};
  }
  const auto& d = std::get<DoubleCartPoleState>(state);
  return {d.x,
          std::sin(d.theta1),
          std::sin(d.theta2),
          std::cos(d.theta1),
          std::cos(d.theta2),
          d.x_dot,
          d.theta1_dot,
          d.theta2_dot,
          0.0,
          0.0,
          0.0};
}

Environment::Environment(EnvConfig config) : Environment(config, MechanismParams{}) {}

Environment::Environment(EnvConfig config, MechanismParams params)
    : config_(config), params_(params) {
  config_.validate();
  params_.validate();
  if (config_.id == EnvId::InvertedPendulum) {
    state_ = CartPoleState{};
  } else {
    state_ = DoubleCartPoleState{};
  }
}

Observation Environment::reset(std::uint64_t seed) {
  CounterRng rng(derive_key(seed, Stream::EnvReset));
  const double w = config_.init_noise;
  auto draw = [&] { return w > 0.0 ? rng.uniform(-w, w) : 0.0; };
  if (config_.id == EnvId::InvertedPendulum) {
    CartPoleState s;
    s.x = draw();
    s.x_dot = draw();
    s.theta = draw();
    s.theta_dot = draw();
    state_ = s;
  } else {
    DoubleCartPoleState s;
    s.x = draw();
    s.theta1 = draw();
    s.theta2 = draw();
    s.x_dot = draw();
    s.theta1_dot = draw();
    s.theta2_dot = draw();
    state_ = s;
  }
  steps_ = 0;
  done_ = false;
  reward_emitted_ = 0.0;
  return observation();
}

void Environment::set_state(const PhysicsState& state) {
  if (state.index() != state_.index()) {
    throw std::invalid_argument("Environment::set_state: mechanism mismatch");
  }
  state_ = state;
}

StepResult Environment::step(double action) {
  if (done_) throw std::logic_error("Environment::step: episode already finished");
  if (std::isnan(action)) throw std::domain_error("Environment::step: action is NaN");
  const double force = std::clamp(action, -params_.force_limit, params_.force_limit);

  StepResult r;
  if (auto* s = std::get_if<CartPoleState>(&state_)) {
    *s = rk4_step(*s, force, params_);
    r.terminal = !(std::abs(s->theta) <= config_.angle_limit);
    r.reward = r.terminal ? 0.0 : 1.0;
  } else {
    auto& d = std::get<DoubleCartPoleState>(state_);
    d = rk4_step(d, force, params_);
    r.terminal = !(tip_height(d, params_) >= config_.min_tip_height);
    r.reward = r.terminal ? 0.0
                          : config_.alive_reward -
                                config_.cart_velocity_penalty * d.x_dot * d.x_dot -
                                config_.angular_velocity_penalty *
                                    (d.theta1_dot * d.theta1_dot + d.theta2_dot * d.theta2_dot);
  }
  ++steps_;
  r.truncated = !r.terminal && steps_ >= config_.max_steps;
  done_ = r.terminal || r.truncated;
  reward_emitted_ += r.reward;
  r.observation = observation();
  return r;
}

double episode_score(std::span<const double> rewards) {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

}  // namespace coaching
