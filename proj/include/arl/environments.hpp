#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "arl/errors.hpp"
#include "arl/mdp.hpp"
#include "arl/rng.hpp"

namespace arl {

/// Two states {x0, x1}; a0 moves to the other state, a1 stays put.
/// Reward 1 whenever the current state is x0. Starts in x0.
inline FiniteMdp two_state_env(double gamma = 0.9, std::size_t horizon = 30) {
  constexpr std::size_t kSwitch = 0;
  constexpr std::size_t kStay = 1;
  std::vector<std::size_t> next(4);
  next[0 * 2 + kSwitch] = 1;
  next[0 * 2 + kStay] = 0;
  next[1 * 2 + kSwitch] = 0;
  next[1 * 2 + kStay] = 1;
  std::vector<double> rewards = {1.0, 1.0, 0.0, 0.0};
  return FiniteMdp::deterministic(2, 2, std::move(rewards), next, gamma, horizon, 0);
}

struct CartPoleParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double force_mag = 10.0;
  double tau = 0.02;
  double theta_threshold = 12.0 * 2.0 * std::numbers::pi / 360.0;
  double x_threshold = 2.4;
  double reset_bound = 0.05;
};

/// (cart position, cart velocity, pole angle, pole angular velocity)
using CartState = std::array<double, 4>;

struct CartPoleStep {
  CartState state;
  double reward;
  bool done;
};

inline bool cartpole_terminal(const CartState& s, const CartPoleParams& p = {}) {
  return s[0] < -p.x_threshold || s[0] > p.x_threshold || s[2] < -p.theta_threshold || s[2] > p.theta_threshold;
}

/// One explicit-Euler step of the frictionless cart-pole. Action 0 pushes
/// left, action 1 pushes right.
inline CartPoleStep cartpole_step(const CartState& s, std::size_t action, const CartPoleParams& p = {}) {
  for (double v : s)
    if (!std::isfinite(v)) throw NumericError("cartpole_step: non-finite state");
  if (action > 1) throw InvalidInput("cartpole_step: action must be 0 (left) or 1 (right)");
  const double total_mass = p.cart_mass + p.pole_mass;
  const double polemass_length = p.pole_mass * p.half_length;
  const double force = action == 1 ? p.force_mag : -p.force_mag;
  const auto [x, x_dot, theta, theta_dot] = s;
  const double cos_theta = std::cos(theta);
  const double sin_theta = std::sin(theta);
  const double temp = (force + polemass_length * theta_dot * theta_dot * sin_theta) / total_mass;
  const double theta_acc = (p.gravity * sin_theta - cos_theta * temp) /
                           (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_theta * cos_theta / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_theta / total_mass;
  CartState next = {x + p.tau * x_dot, x_dot + p.tau * x_acc, theta + p.tau * theta_dot, theta_dot + p.tau * theta_acc};
  return {next, 1.0, cartpole_terminal(next, p)};
}

/// Each component uniform on [-reset_bound, reset_bound].
inline CartState cartpole_reset(RngStream& rng, const CartPoleParams& p = {}) {
  CartState s{};
  for (double& v : s) v = rng.uniform(-p.reset_bound, p.reset_bound);
  return s;
}

class CartPoleEnv {
 public:
  using State = CartState;
  static constexpr std::size_t kStateDimension = 4;

  explicit CartPoleEnv(double gamma = 1.0, std::size_t horizon = 500, CartPoleParams params = {})
      : params_(params), gamma_(gamma), horizon_(horizon) {
    if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw InvalidInput("CartPoleEnv: gamma must lie in (0, 1]");
    if (horizon_ < 1) throw InvalidInput("CartPoleEnv: horizon must be >= 1");
  }

  std::size_t action_count() const { return 2; }
  double gamma() const { return gamma_; }
  std::size_t horizon() const { return horizon_; }
  const CartPoleParams& params() const { return params_; }

  State initial_state(RngStream& rng) const { return cartpole_reset(rng, params_); }
  double reward(const State&, std::size_t) const { return 1.0; }
  State step(const State& x, std::size_t a) const { return cartpole_step(x, a, params_).state; }
  State sample_next(const State& x, std::size_t a, RngStream&) const { return step(x, a); }
  bool is_terminal(const State& x) const { return cartpole_terminal(x, params_); }

 private:
  CartPoleParams params_;
  double gamma_;
  std::size_t horizon_;
};

/// R(theta) = -|theta|^2. Its Gaussian smoothing has gradient -2 theta for every sigma.
class QuadraticBlackBox {
 public:
  explicit QuadraticBlackBox(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw InvalidInput("QuadraticBlackBox: dimension must be positive");
  }

  std::size_t dimension() const { return dimension_; }

  double operator()(std::span<const double> theta) const {
    if (theta.size() != dimension_) throw InvalidInput("QuadraticBlackBox: dimension mismatch");
    double sum = 0.0;
    for (double v : theta) sum += v * v;
    return -sum;
  }

  std::vector<double> smoothed_gradient(std::span<const double> theta) const {
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) g[i] = -2.0 * theta[i];
    return g;
  }

 private:
  std::size_t dimension_;
};

}  // namespace arl
