#pragma once

namespace coaching {

struct PidGains {
  double kp = 3.0;
  double ki = 0.5;
  double kd = 0.1;

  /// Gains must be finite, non-negative, and not all zero.
  void validate() const;
  bool operator==(const PidGains&) const = default;
};

struct PidMemory {
  double integral = 0.0;
  double prev_error = 0.0;
  bool primed = false;  // prev_error is valid
};

struct PidOutput {
  double control = 0.0;
  PidMemory memory;
};

inline constexpr double kPidOutputLimit = 10.0;

// u = kp e + ki (integral + e dt) + kd de/dt, clamped to +-output_limit.
// The integral is never limited: saturation does not stop accumulation.
PidOutput pid_update(const PidMemory& memory, double error, double dt, const PidGains& gains,
                     double output_limit = kPidOutputLimit);

PidMemory pid_reset(const PidMemory& memory);

}  // namespace coaching
