#include "coaching/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace coaching {
namespace {

template <std::size_t N>
void require_finite(const std::array<double, N>& values, double force, const char* who) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::domain_error(std::string(who) + ": non-finite state");
  }
  if (!std::isfinite(force)) throw std::domain_error(std::string(who) + ": non-finite force");
}

void require_force_in_range(double force, const MechanismParams& p, const char* who) {
  if (std::abs(force) > p.force_limit) {
    throw std::domain_error(std::string(who) + ": |force| exceeds force_limit");
  }
}

template <class State, class Derivative>
State rk4_advance(const State& s, double dt, Derivative&& f) {
  constexpr std::size_t n = State::kDim;
  const auto y0 = s.to_array();
  auto offset = [&](const std::array<double, n>& k, double h) {
    std::array<double, n> y{};
    for (std::size_t i = 0; i < n; ++i) y[i] = y0[i] + h * k[i];
    return State::from_array(y);
  };
  const auto k1 = f(s).to_array();
  const auto k2 = f(offset(k1, 0.5 * dt)).to_array();
  const auto k3 = f(offset(k2, 0.5 * dt)).to_array();
  const auto k4 = f(offset(k3, dt)).to_array();
  std::array<double, n> y{};
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return State::from_array(y);
}

}  // namespace

void MechanismParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(cart_mass)) throw std::invalid_argument("cart_mass must be positive");
  for (std::size_t i = 0; i < 2; ++i) {
    if (!positive(pole_mass[i])) throw std::invalid_argument("pole_mass must be positive");
    if (!positive(pole_length[i])) throw std::invalid_argument("pole_length must be positive");
  }
  if (!positive(gravity)) throw std::invalid_argument("gravity must be positive");
  if (!positive(dt)) throw std::invalid_argument("dt must be positive");
  if (!positive(force_limit)) throw std::invalid_argument("force_limit must be positive");
}

CartPoleState cartpole_derivatives(const CartPoleState& s, double force, const MechanismParams& p) {
  require_finite(s.to_array(), force, "cartpole_derivatives");
  require_force_in_range(force, p, "cartpole_derivatives");

  const double m = p.pole_mass[0];
  const double half = 0.5 * p.pole_length[0];
  const double inertia = m * half * half / 3.0;
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);

  // [M+m, -m l c; -m l c, m l^2 + I] [x''; th''] = [F - m l s th'^2; m g l s]
  const double a11 = p.cart_mass + m;
  const double a12 = -m * half * c;
  const double a22 = m * half * half + inertia;
  const double b1 = force - m * half * sn * s.theta_dot * s.theta_dot;
  const double b2 = m * p.gravity * half * sn;
  const double det = a11 * a22 - a12 * a12;

  CartPoleState d;
  d.x = s.x_dot;
  d.x_dot = (b1 * a22 - a12 * b2) / det;
  d.theta = s.theta_dot;
  d.theta_dot = (a11 * b2 - a12 * b1) / det;
  return d;
}

DoubleCartPoleState double_derivatives(const DoubleCartPoleState& s, double force,
                                       const MechanismParams& p) {
  require_finite(s.to_array(), force, "double_derivatives");
  require_force_in_range(force, p, "double_derivatives");

  const double m1 = p.pole_mass[0];
  const double m2 = p.pole_mass[1];
  const double len1 = p.pole_length[0];
  const double l1 = 0.5 * len1;
  const double l2 = 0.5 * p.pole_length[1];
  const double i1 = m1 * l1 * l1 / 3.0;
  const double i2 = m2 * l2 * l2 / 3.0;
  const double g = p.gravity;

  const double c1 = std::cos(s.theta1);
  const double s1 = std::sin(s.theta1);
  const double c2 = std::cos(s.theta2);
  const double s2 = std::sin(s.theta2);
  const double c12 = std::cos(s.theta1 - s.theta2);
  const double s12 = std::sin(s.theta1 - s.theta2);
  const double w1sq = s.theta1_dot * s.theta1_dot;
  const double w2sq = s.theta2_dot * s.theta2_dot;

  const double k1 = m1 * l1 + m2 * len1;
  double a[3][4] = {
      {p.cart_mass + m1 + m2, -k1 * c1, -m2 * l2 * c2,
       force - k1 * s1 * w1sq - m2 * l2 * s2 * w2sq},
      {-k1 * c1, m1 * l1 * l1 + i1 + m2 * len1 * len1, m2 * len1 * l2 * c12,
       k1 * g * s1 - m2 * len1 * l2 * s12 * w2sq},
      {-m2 * l2 * c2, m2 * len1 * l2 * c12, m2 * l2 * l2 + i2,
       m2 * l2 * g * s2 + m2 * len1 * l2 * s12 * w1sq},
  };

  // Gaussian elimination with partial pivoting on the augmented system.
  double scale = 0.0;
  for (auto& row : a) {
    for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(row[j]));
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-12 * scale) {
      throw std::domain_error("double_derivatives: singular mass matrix");
    }
    if (pivot != col) {
      for (int j = 0; j < 4; ++j) std::swap(a[col][j], a[pivot][j]);
    }
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int j = col; j < 4; ++j) a[r][j] -= f * a[col][j];
    }
  }
  double acc[3];
  for (int r = 2; r >= 0; --r) {
    double v = a[r][3];
    for (int j = r + 1; j < 3; ++j) v -= a[r][j] * acc[j];
    acc[r] = v / a[r][r];
  }

  DoubleCartPoleState d;
  d.x = s.x_dot;
  d.theta1 = s.theta1_dot;
  d.theta2 = s.theta2_dot;
  d.x_dot = acc[0];
  d.theta1_dot = acc[1];
  d.theta2_dot = acc[2];
  return d;
}

CartPoleState rk4_step(const CartPoleState& s, double force, const MechanismParams& p) {
  if (!(p.dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  return rk4_advance(s, p.dt, [&](const CartPoleState& y) { return cartpole_derivatives(y, force, p); });
}

DoubleCartPoleState rk4_step(const DoubleCartPoleState& s, double force, const MechanismParams& p) {
  if (!(p.dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
  return rk4_advance(s, p.dt,
                     [&](const DoubleCartPoleState& y) { return double_derivatives(y, force, p); });
}

double mechanical_energy(const CartPoleState& s, const MechanismParams& p) {
  const double m = p.pole_mass[0];
  const double half = 0.5 * p.pole_length[0];
  const double inertia = m * half * half / 3.0;
  const double c = std::cos(s.theta);
  const double kinetic = 0.5 * (p.cart_mass + m) * s.x_dot * s.x_dot -
                         m * half * c * s.x_dot * s.theta_dot +
                         0.5 * (m * half * half + inertia) * s.theta_dot * s.theta_dot;
  return kinetic + m * p.gravity * half * c;
}

double mechanical_energy(const DoubleCartPoleState& s, const MechanismParams& p) {
  const double m1 = p.pole_mass[0];
  const double m2 = p.pole_mass[1];
  const double len1 = p.pole_length[0];
  const double l1 = 0.5 * len1;
  const double l2 = 0.5 * p.pole_length[1];
  const double i1 = m1 * l1 * l1 / 3.0;
  const double i2 = m2 * l2 * l2 / 3.0;
  const double k1 = m1 * l1 + m2 * len1;
  const double c1 = std::cos(s.theta1);
  const double c2 = std::cos(s.theta2);
  const double c12 = std::cos(s.theta1 - s.theta2);
  const double v = s.x_dot;
  const double w1 = s.theta1_dot;
  const double w2 = s.theta2_dot;
  const double kinetic = 0.5 * (p.cart_mass + m1 + m2) * v * v - k1 * c1 * v * w1 -
                         m2 * l2 * c2 * v * w2 +
                         0.5 * (m1 * l1 * l1 + i1 + m2 * len1 * len1) * w1 * w1 +
                         m2 * len1 * l2 * c12 * w1 * w2 + 0.5 * (m2 * l2 * l2 + i2) * w2 * w2;
  const double potential = p.gravity * (k1 * c1 + m2 * l2 * c2);
  return kinetic + potential;
}

double tip_height(const DoubleCartPoleState& s, const MechanismParams& p) {
  return p.pole_length[0] * std::cos(s.theta1) + p.pole_length[1] * std::cos(s.theta2);
}

}  // namespace coaching
