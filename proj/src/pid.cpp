#include "coaching/pid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coaching {

void PidGains::validate() const {
  for (double g : {kp, ki, kd}) {
    if (!std::isfinite(g) || g < 0.0) throw std::invalid_argument("PID gains must be non-negative");
  }
  if (kp == 0.0 && ki == 0.0 && kd == 0.0) {
    throw std::invalid_argument("PID gains must not all be zero");
  }
}

PidOutput pid_update(const PidMemory& memory, double error, double dt, const PidGains& gains,
                     double output_limit) {
  if (!std::isfinite(error)) throw std::domain_error("pid_update: non-finite error");
  if (!(dt > 0.0)) throw std::invalid_argument("pid_update: dt must be positive");

  PidOutput out;
  out.memory.integral = memory.integral + error * dt;
  const double derivative = memory.primed ? (error - memory.prev_error) / dt : 0.0;
  out.memory.prev_error = error;
  out.memory.primed = true;

  const double raw = gains.kp * error + gains.ki * out.memory.integral + gains.kd * derivative;
  out.control = std::clamp(raw, -output_limit, output_limit);
  return out;
}

PidMemory pid_reset(const PidMemory&) { return PidMemory{}; }

}  // namespace coaching
