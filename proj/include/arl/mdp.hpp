#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arl/errors.hpp"
#include "arl/rng.hpp"

namespace arl {

/// Paired state/action history. states has one more entry than actions
/// (the state reached after the last action).
template <class State>
struct Trajectory {
  std::vector<State> states;
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
  std::optional<std::size_t> terminated_at;

  std::size_t length() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
};

/// sum_t gamma^t r_t over the recorded steps. gamma == 0 keeps only r_0.
template <class State>
double discounted_return(const Trajectory<State>& trajectory, double gamma) {
  if (trajectory.rewards.empty()) throw InvalidInput("discounted_return: empty trajectory");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidInput("discounted_return: gamma must lie in [0, 1]");
  double total = 0.0;
  double discount = 1.0;
  for (double r : trajectory.rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

/// sum_{t<n} gamma^t, the return of a constant unit reward.
inline double discount_sum(double gamma, std::size_t n) {
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    total += discount;
    discount *= gamma;
  }
  return total;
}

/// Index drawn from a probability vector with a single uniform variate.
/// Falls back to the last positive entry when rounding leaves u above the
/// cumulative total.
inline std::size_t sample_categorical(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

/// Finite MDP with an explicit transition kernel T(x'|x,a). A deterministic
/// transition f(x,a) is the point-mass special case.
class FiniteMdp {
 public:
  using State = std::size_t;

  FiniteMdp(std::size_t n_states, std::size_t n_actions, std::vector<double> rewards,
            std::vector<double> kernel, double gamma, std::size_t horizon,
            std::vector<double> initial = {})
      : n_states_(n_states),
        n_actions_(n_actions),
        rewards_(std::move(rewards)),
        kernel_(std::move(kernel)),
        initial_(std::move(initial)),
        gamma_(gamma),
        horizon_(horizon) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidInput("FiniteMdp: empty state or action space");
    if (rewards_.size() != n_states_ * n_actions_) throw InvalidInput("FiniteMdp: reward table has wrong size");
    if (kernel_.size() != n_states_ * n_actions_ * n_states_)
      throw InvalidInput("FiniteMdp: kernel has wrong size");
    if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw InvalidInput("FiniteMdp: gamma must lie in (0, 1]");
    if (horizon_ < 1) throw InvalidInput("FiniteMdp: horizon must be >= 1");
    for (double r : rewards_)
      if (!std::isfinite(r)) throw InvalidInput("FiniteMdp: non-finite reward");
    for (std::size_t x = 0; x < n_states_; ++x)
      for (std::size_t a = 0; a < n_actions_; ++a) check_simplex(kernel_row(x, a), "kernel row");
    if (initial_.empty()) {
      initial_.assign(n_states_, 0.0);
      initial_[0] = 1.0;
    }
    if (initial_.size() != n_states_) throw InvalidInput("FiniteMdp: initial distribution has wrong size");
    check_simplex(initial_, "initial distribution");
  }

  /// Builds the point-mass kernel from a successor table next[x * n_actions + a].
  static FiniteMdp deterministic(std::size_t n_states, std::size_t n_actions, std::vector<double> rewards,
                                 const std::vector<std::size_t>& next, double gamma, std::size_t horizon,
                                 std::size_t initial_state = 0) {
    if (next.size() != n_states * n_actions) throw InvalidInput("FiniteMdp: successor table has wrong size");
    std::vector<double> kernel(n_states * n_actions * n_states, 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (next[i] >= n_states) throw InvalidInput("FiniteMdp: successor out of range");
      kernel[i * n_states + next[i]] = 1.0;
    }
    if (initial_state >= n_states) throw InvalidInput("FiniteMdp: initial state out of range");
    std::vector<double> initial(n_states, 0.0);
    initial[initial_state] = 1.0;
    return FiniteMdp(n_states, n_actions, std::move(rewards), std::move(kernel), gamma, horizon,
                     std::move(initial));
  }

  std::size_t state_count() const { return n_states_; }
  std::size_t action_count() const { return n_actions_; }
  double gamma() const { return gamma_; }
  std::size_t horizon() const { return horizon_; }

  double reward(State x, std::size_t a) const {
    check_pair(x, a);
    return rewards_[x * n_actions_ + a];
  }

  std::span<const double> kernel_row(State x, std::size_t a) const {
    return {kernel_.data() + (x * n_actions_ + a) * n_states_, n_states_};
  }

  std::span<const double> initial_distribution() const { return initial_; }

  bool is_deterministic() const {
    for (std::size_t x = 0; x < n_states_; ++x)
      for (std::size_t a = 0; a < n_actions_; ++a)
        if (point_mass(kernel_row(x, a)) == npos) return false;
    return point_mass(initial_) != npos;
  }

  /// f(x, a); throws DomainError when the kernel row is not a point mass.
  State deterministic_next(State x, std::size_t a) const {
    check_pair(x, a);
    std::size_t next = point_mass(kernel_row(x, a));
    if (next == npos) throw DomainError("FiniteMdp: transition is stochastic");
    return next;
  }

  State initial_state(RngStream& rng) const { return sample_categorical(initial_, rng.uniform()); }

  State sample_next(State x, std::size_t a, RngStream& rng) const {
    check_pair(x, a);
    return sample_categorical(kernel_row(x, a), rng.uniform());
  }

  bool is_terminal(State) const { return false; }

  FiniteMdp with_horizon(std::size_t horizon) const {
    FiniteMdp copy = *this;
    if (horizon < 1) throw InvalidInput("FiniteMdp: horizon must be >= 1");
    copy.horizon_ = horizon;
    return copy;
  }

  FiniteMdp with_gamma(double gamma) const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("FiniteMdp: gamma must lie in (0, 1]");
    FiniteMdp copy = *this;
    copy.gamma_ = gamma;
    return copy;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  static std::size_t point_mass(std::span<const double> row) {
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] == 1.0) return i;
    return npos;
  }

  static void check_simplex(std::span<const double> row, const char* what) {
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw InvalidInput(std::string("FiniteMdp: negative entry in ") + what);
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput(std::string("FiniteMdp: ") + what + " does not sum to 1");
  }

  void check_pair(State x, std::size_t a) const {
    if (x >= n_states_) throw InvalidInput("FiniteMdp: state out of range");
    if (a >= n_actions_) throw InvalidInput("FiniteMdp: action out of range");
  }

  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> rewards_;
  std::vector<double> kernel_;
  std::vector<double> initial_;
  double gamma_;
  std::size_t horizon_;
};

template <class Env>
concept Environment = requires(const Env& env, const typename Env::State& x, std::size_t a, RngStream& rng) {
  typename Env::State;
  { env.action_count() } -> std::convertible_to<std::size_t>;
  { env.gamma() } -> std::convertible_to<double>;
  { env.horizon() } -> std::convertible_to<std::size_t>;
  { env.initial_state(rng) } -> std::same_as<typename Env::State>;
  { env.reward(x, a) } -> std::convertible_to<double>;
  { env.sample_next(x, a, rng) } -> std::same_as<typename Env::State>;
  { env.is_terminal(x) } -> std::convertible_to<bool>;
};

/// Environments whose transition is a plain function of (x, a).
template <class Env>
concept DeterministicEnvironment = Environment<Env> && requires(const Env& env, const typename Env::State& x, std::size_t a) {
  { env.step(x, a) } -> std::same_as<typename Env::State>;
};

template <class Policy, class State>
concept StochasticPolicy = requires(const Policy& policy, const State& x, std::size_t a) {
  { policy.action_count() } -> std::convertible_to<std::size_t>;
  { policy.probability(x, a) } -> std::convertible_to<double>;
};

template <class Policy, class State>
std::size_t sample_action(const Policy& policy, const State& x, RngStream& rng) {
  const double u = rng.uniform();
  const std::size_t n = policy.action_count();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < n; ++a) {
    const double p = policy.probability(x, a);
    if (p <= 0.0) continue;
    cumulative += p;
    last_positive = a;
    if (u < cumulative) return a;
  }
  return last_positive;
}

/// Overload point for policy/environment compatibility beyond action counts.
template <class Policy, class Env>
void check_compatible(const Policy& policy, const Env& env) {
  if (policy.action_count() != env.action_count())
    throw ConfigError("rollout: policy action count does not match environment");
  if constexpr (requires { policy.state_count(); env.state_count(); }) {
    if (policy.state_count() != env.state_count())
      throw ConfigError("rollout: policy state count does not match environment");
  }
  if constexpr (requires { policy.dimension(); Env::kStateDimension; }) {
    if (policy.dimension() != Env::kStateDimension)
      throw ConfigError("rollout: policy dimension does not match environment state");
  }
}

/// Per-time deterministic transition maps T^(t)(x, a) for a finite MDP,
/// each drawn i.i.d. from the kernel, plus a sampled initial state.
/// Sharing one plan across agents gives action-dependent determinism of
/// states: equal (t, x, a) always lands in the same successor.
class FiniteLiftedPlan {
 public:
  using State = std::size_t;

  FiniteLiftedPlan(State initial, std::size_t horizon, std::size_t n_states, std::size_t n_actions,
                   std::vector<std::size_t> maps)
      : initial_(initial), horizon_(horizon), n_states_(n_states), n_actions_(n_actions), maps_(std::move(maps)) {
    if (maps_.size() != horizon_ * n_states_ * n_actions_) throw InvalidInput("FiniteLiftedPlan: wrong map size");
  }

  State initial_state() const { return initial_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t state_count() const { return n_states_; }
  std::size_t action_count() const { return n_actions_; }

  /// Successor for the transition taken at step t (0-based).
  State map(std::size_t t, State x, std::size_t a) const {
    if (t >= horizon_) throw InvalidInput("FiniteLiftedPlan: time index beyond plan horizon");
    return maps_[(t * n_states_ + x) * n_actions_ + a];
  }

  template <class Env>
  State next_state(const Env&, std::size_t t, State x, std::size_t a) const {
    return map(t, x, a);
  }

 private:
  State initial_;
  std::size_t horizon_;
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<std::size_t> maps_;
};

/// Lifted plan of a deterministic environment: only the initial state is random.
template <class S>
class DeterministicPlan {
 public:
  using State = S;

  explicit DeterministicPlan(State initial, std::size_t horizon) : initial_(std::move(initial)), horizon_(horizon) {}

  State initial_state() const { return initial_; }
  std::size_t horizon() const { return horizon_; }

  template <class Env>
  State next_state(const Env& env, std::size_t, const State& x, std::size_t a) const {
    return env.step(x, a);
  }

 private:
  State initial_;
  std::size_t horizon_;
};

inline FiniteLiftedPlan sample_lifted_plan(const FiniteMdp& env, std::size_t horizon, RngStream& rng) {
  const std::size_t n_states = env.state_count();
  const std::size_t n_actions = env.action_count();
  const std::size_t initial = env.initial_state(rng);
  std::vector<std::size_t> maps(horizon * n_states * n_actions);
  std::size_t i = 0;
  for (std::size_t t = 0; t < horizon; ++t)
    for (std::size_t x = 0; x < n_states; ++x)
      for (std::size_t a = 0; a < n_actions; ++a) maps[i++] = env.sample_next(x, a, rng);
  return FiniteLiftedPlan(initial, horizon, n_states, n_actions, std::move(maps));
}

template <DeterministicEnvironment Env>
DeterministicPlan<typename Env::State> sample_lifted_plan(const Env& env, std::size_t horizon, RngStream& rng) {
  return DeterministicPlan<typename Env::State>(env.initial_state(rng), horizon);
}

template <class Plan, class Env>
concept LiftedPlanFor = requires(const Plan& plan, const Env& env, const typename Env::State& x, std::size_t a) {
  { plan.initial_state() } -> std::convertible_to<typename Env::State>;
  { plan.horizon() } -> std::convertible_to<std::size_t>;
  { plan.next_state(env, std::size_t{0}, x, a) } -> std::convertible_to<typename Env::State>;
};

/// Live-randomness rollout: rng drives both action sampling and transitions.
template <Environment Env, class Policy>
  requires StochasticPolicy<Policy, typename Env::State>
Trajectory<typename Env::State> rollout(const Policy& policy, const Env& env, std::size_t horizon, RngStream& rng) {
  check_compatible(policy, env);
  Trajectory<typename Env::State> traj;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.rewards.reserve(horizon);
  auto x = env.initial_state(rng);
  traj.states.push_back(x);
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::size_t a = sample_action(policy, x, rng);
    traj.rewards.push_back(env.reward(x, a));
    traj.actions.push_back(a);
    x = env.sample_next(x, a, rng);
    traj.states.push_back(x);
    if (env.is_terminal(x)) {
      traj.terminated_at = t + 1;
      break;
    }
  }
  return traj;
}

/// Rollout through a shared lifted plan. rng only drives action sampling;
/// all environment randomness comes from the plan.
template <Environment Env, class Policy, class Plan>
  requires StochasticPolicy<Policy, typename Env::State> && LiftedPlanFor<Plan, Env>
Trajectory<typename Env::State> rollout(const Policy& policy, const Env& env, std::size_t horizon, const Plan& plan,
                                        RngStream& rng) {
  check_compatible(policy, env);
  if (plan.horizon() < horizon) throw ConfigError("rollout: lifted plan shorter than horizon");
  Trajectory<typename Env::State> traj;
  traj.states.reserve(horizon + 1);
  traj.actions.reserve(horizon);
  traj.rewards.reserve(horizon);
  typename Env::State x = plan.initial_state();
  traj.states.push_back(x);
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::size_t a = sample_action(policy, x, rng);
    traj.rewards.push_back(env.reward(x, a));
    traj.actions.push_back(a);
    x = plan.next_state(env, t, x, a);
    traj.states.push_back(x);
    if (env.is_terminal(x)) {
      traj.terminated_at = t + 1;
      break;
    }
  }
  return traj;
}

}  // namespace arl
