#pragma once

// Frictionless equations of motion for a cart-pole and a cart-mounted double
// inverted pendulum. Angles are measured from upright, counterclockwise
// positive, with the cart's x axis pointing right; a positive force pushes the
// cart right. Links are uniform rods.

#include <array>
#include <cstddef>

namespace coaching {

struct CartPoleState {
  static constexpr std::size_t kDim = 4;

  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;

  std::array<double, kDim> to_array() const { return {x, x_dot, theta, theta_dot}; }
  static CartPoleState from_array(const std::array<double, kDim>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  bool operator==(const CartPoleState&) const = default;
};

struct DoubleCartPoleState {
  static constexpr std::size_t kDim = 6;

  double x = 0.0;
  double theta1 = 0.0;  // lower link
  double theta2 = 0.0;  // upper link, absolute angle
  double x_dot = 0.0;
  double theta1_dot = 0.0;
  double theta2_dot = 0.0;

  std::array<double, kDim> to_array() const {
    return {x, theta1, theta2, x_dot, theta1_dot, theta2_dot};
  }
  static DoubleCartPoleState from_array(const std::array<double, kDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  bool operator==(const DoubleCartPoleState&) const = default;
};

struct MechanismParams {
  double cart_mass = 1.0;
  // Index 0 is the only pole of the cart-pole, or the lower link.
  std::array<double, 2> pole_mass{0.1, 0.1};
  // Full link lengths.
  std::array<double, 2> pole_length{0.6, 0.6};
  double gravity = 9.81;
  double dt = 0.01;
  double force_limit = 10.0;

  /// Throws std::invalid_argument on non-positive masses, lengths, or dt.
  void validate() const;
  bool operator==(const MechanismParams&) const = default;
};

/// Time derivative of the cart-pole state; fields hold (x', x'', theta', theta'').
/// Throws std::domain_error on non-finite input or |force| above the limit.
CartPoleState cartpole_derivatives(const CartPoleState& s, double force, const MechanismParams& p);

/// Accelerations come from solving the 3x3 mass-matrix system at `s`.
DoubleCartPoleState double_derivatives(const DoubleCartPoleState& s, double force,
                                       const MechanismParams& p);

CartPoleState rk4_step(const CartPoleState& s, double force, const MechanismParams& p);
DoubleCartPoleState rk4_step(const DoubleCartPoleState& s, double force, const MechanismParams& p);

// Total mechanical energy, potential measured from the cart rail.
double mechanical_energy(const CartPoleState& s, const MechanismParams& p);
double mechanical_energy(const DoubleCartPoleState& s, const MechanismParams& p);

/// Height of the upper link's tip above the cart pivot.
double tip_height(const DoubleCartPoleState& s, const MechanismParams& p);

}  // namespace coaching
