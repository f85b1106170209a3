#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "arl/environments.hpp"
#include "arl/errors.hpp"
#include "arl/mdp.hpp"
#include "arl/parallel.hpp"
#include "arl/policy.hpp"
#include "arl/rng.hpp"

namespace arl {

struct HyperParams {
  double beta = 1.0;   // selection strength
  double alpha = 0.1;  // learning rate
  double sigma = 0.05; // mutation / ZOO noise scale
  std::size_t pop_size = 1000;
  std::size_t generations = 200;
  bool arl_mutation = false;  // extension: Gaussian mutation after ancestral learning

  void validate() const {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be a finite value >= 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a finite value >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be a finite value >= 0");
    if (pop_size < 2) throw ConfigError("pop_size must be >= 2");
  }
};

/// Seed root plus parallelism for one trial. Every random stream is a pure
/// function of (seed, trial, generation, agent, tag).
struct EvalContext {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  std::size_t jobs = 1;

  RngStream stream(std::uint64_t generation, std::uint64_t agent, StreamTag purpose) const {
    return make_stream(seed, {trial, generation, agent, tag(purpose)});
  }
  RngStream stream(std::uint64_t generation, StreamTag purpose) const {
    return make_stream(seed, {trial, generation, tag(purpose)});
  }
};

template <class Policy, class State>
struct Agent {
  Policy policy;
  Trajectory<State> trajectory;  // history of the agent that produced this one
  double ret = 0.0;
  std::optional<std::size_t> parent;
};

template <class Policy, class State>
struct Population {
  std::vector<Agent<Policy, State>> agents;
  std::size_t generation = 0;
  std::vector<double> evaluated_returns;  // returns observed before the last selection

  std::size_t size() const { return agents.size(); }
};

template <class State, class Policy>
Population<Policy, State> make_population(std::vector<Policy> policies) {
  Population<Policy, State> pop;
  pop.agents.reserve(policies.size());
  for (auto& p : policies) pop.agents.push_back(Agent<Policy, State>{std::move(p), {}, 0.0, std::nullopt});
  return pop;
}

/// Normalized selection weights exp(beta (R_i - max R)) / sum.
inline std::vector<double> fitness_weights(std::span<const double> returns, double beta) {
  if (returns.empty()) throw InvalidInput("fitness_weights: no returns");
  for (double r : returns)
    if (!std::isfinite(r)) throw InvalidInput("fitness_weights: non-finite return");
  const double best = *std::max_element(returns.begin(), returns.end());
  std::vector<double> w(returns.size());
  double total = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) total += (w[i] = std::exp(beta * (returns[i] - best)));
  for (double& v : w) v /= total;
  return w;
}

/// n_draws independent multinomial draws (with replacement).
inline std::vector<std::size_t> select(std::span<const double> weights, std::size_t n_draws, RngStream& rng) {
  if (weights.empty()) throw InvalidInput("select: empty weight vector");
  std::vector<double> cumulative(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw InvalidInput("select: negative or NaN weight");
    cumulative[i] = (total += weights[i]);
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("select: weights do not sum to 1");
  std::vector<std::size_t> picks(n_draws);
  for (auto& pick : picks) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    pick = static_cast<std::size_t>(it - cumulative.begin());
    while (weights[pick] == 0.0) --pick;  // u landed exactly on a boundary
  }
  return picks;
}

/// (1/T) sum_t grad log pi(a_t | x_t) along the parent trajectory.
template <class Policy, class State>
std::vector<double> ancestral_gradient(const Policy& policy, const Trajectory<State>& parent) {
  std::vector<double> grad(policy.parameter_count(), 0.0);
  if (parent.empty()) return grad;
  const double inv_t = 1.0 / static_cast<double>(parent.length());
  for (std::size_t t = 0; t < parent.length(); ++t) {
    const auto g = policy.log_prob_grad(parent.states[t], parent.actions[t]);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += inv_t * g[i];
  }
  return grad;
}

/// Tableau parameters move by the natural gradient, which is the parent mixture.
inline TableauPolicy ancestral_learning(const TableauPolicy& policy, const Trajectory<std::size_t>& parent,
                                        double alpha) {
  return natural_gradient_tableau(policy, parent, alpha);
}

template <class Policy, class State>
Policy ancestral_learning(const Policy& policy, const Trajectory<State>& parent, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidInput("ancestral_learning: alpha must be >= 0");
  if (alpha == 0.0 || parent.empty()) return policy;
  std::vector<double> params = policy.params();
  const auto grad = ancestral_gradient(policy, parent);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += alpha * grad[i];
  return policy.with_params(std::move(params));
}

struct NoPlan {};

namespace detail {

template <class Policy, class Env, class Plan>
Trajectory<typename Env::State> run_episode(const Policy& policy, const Env& env, const Plan* plan, RngStream& rng) {
  if constexpr (!std::is_same_v<Plan, NoPlan>) {
    if (plan != nullptr) return rollout(policy, env, env.horizon(), *plan, rng);
  }
  return rollout(policy, env, env.horizon(), rng);
}

template <class Policy, class State>
Population<Policy, State> select_next(std::vector<Agent<Policy, State>>&& evaluated, std::vector<double>&& returns,
                                      std::size_t generation, double beta, const EvalContext& ctx) {
  const auto weights = fitness_weights(returns, beta);
  auto rng = ctx.stream(generation, StreamTag::kSelection);
  const auto picks = select(weights, evaluated.size(), rng);
  Population<Policy, State> next;
  next.generation = generation + 1;
  next.agents.reserve(evaluated.size());
  for (std::size_t pick : picks) {
    Agent<Policy, State> child = evaluated[pick];
    child.parent = pick;
    next.agents.push_back(std::move(child));
  }
  next.evaluated_returns = std::move(returns);
  return next;
}

}  // namespace detail

/// One generation of mutation + evaluation + fitness-proportional selection.
/// When a plan is given, every agent shares its transition maps.
template <class Policy, Environment Env, class Plan = NoPlan>
Population<Policy, typename Env::State> poga_iteration(const Population<Policy, typename Env::State>& pop,
                                                       const Env& env, const HyperParams& hp, const EvalContext& ctx,
                                                       const Plan* plan = nullptr) {
  hp.validate();
  const std::size_t n = pop.size();
  if (n == 0) throw InvalidInput("poga_iteration: empty population");
  std::vector<Agent<Policy, typename Env::State>> evaluated(n, pop.agents.front());
  std::vector<double> returns(n);
  parallel_for(n, ctx.jobs, [&](std::size_t i) {
    auto mutation_rng = ctx.stream(pop.generation, i, StreamTag::kMutation);
    auto rollout_rng = ctx.stream(pop.generation, i, StreamTag::kRollout);
    Policy mutated = mutate(pop.agents[i].policy, hp.sigma, mutation_rng);
    auto traj = detail::run_episode(mutated, env, plan, rollout_rng);
    returns[i] = discounted_return(traj, env.gamma());
    evaluated[i] = Agent<Policy, typename Env::State>{std::move(mutated), std::move(traj), returns[i], pop.agents[i].parent};
  });
  return detail::select_next(std::move(evaluated), std::move(returns), pop.generation, hp.beta, ctx);
}

/// One generation of ancestral learning (skipped at generation 0) +
/// evaluation + selection. Each agent learns from the trajectory its parent
/// produced in the previous generation.
template <class Policy, Environment Env, class Plan = NoPlan>
Population<Policy, typename Env::State> arl_iteration(const Population<Policy, typename Env::State>& pop, const Env& env,
                                                      const HyperParams& hp, const EvalContext& ctx,
                                                      const Plan* plan = nullptr) {
  hp.validate();
  const std::size_t n = pop.size();
  if (n == 0) throw InvalidInput("arl_iteration: empty population");
  std::vector<Agent<Policy, typename Env::State>> evaluated(n, pop.agents.front());
  std::vector<double> returns(n);
  parallel_for(n, ctx.jobs, [&](std::size_t i) {
    const auto& agent = pop.agents[i];
    Policy learned = pop.generation == 0 ? agent.policy : ancestral_learning(agent.policy, agent.trajectory, hp.alpha);
    if (hp.arl_mutation) {
      auto mutation_rng = ctx.stream(pop.generation, i, StreamTag::kMutation);
      learned = mutate(learned, hp.sigma, mutation_rng);
    }
    auto rollout_rng = ctx.stream(pop.generation, i, StreamTag::kRollout);
    auto traj = detail::run_episode(learned, env, plan, rollout_rng);
    returns[i] = discounted_return(traj, env.gamma());
    evaluated[i] = Agent<Policy, typename Env::State>{std::move(learned), std::move(traj), returns[i], agent.parent};
  });
  return detail::select_next(std::move(evaluated), std::move(returns), pop.generation, hp.beta, ctx);
}

struct ZooDiagnostics {
  std::vector<double> returns;
  std::vector<double> gradient;         // (1 / (N sigma)) sum_i R_i eps_i
  std::vector<double> gradient_stderr;  // per-coordinate Monte-Carlo standard error
  double best_return = 0.0;
  double mean_return = 0.0;
};

/// Population gradient estimate around `master`. objective(params, agent)
/// returns the observed return of the perturbed parameters.
template <class Objective>
ZooDiagnostics zoo_gradient(std::span<const double> master, Objective&& objective, const HyperParams& hp,
                            const EvalContext& ctx, std::uint64_t generation) {
  hp.validate();
  if (!(hp.sigma > 0.0)) throw ConfigError("zoo: sigma must be > 0");
  const std::size_t n = hp.pop_size;
  const std::size_t d = master.size();
  std::vector<std::vector<double>> noise(n);
  std::vector<double> returns(n);
  parallel_for(n, ctx.jobs, [&](std::size_t i) {
    auto rng = ctx.stream(generation, i, StreamTag::kZooNoise);
    auto [perturbed, eps] = perturb_params(master, hp.sigma, rng);
    returns[i] = objective(perturbed, i);
    noise[i] = std::move(eps);
  });
  ZooDiagnostics diag;
  diag.gradient.assign(d, 0.0);
  diag.gradient_stderr.assign(d, 0.0);
  std::vector<double> sum_sq(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(returns[i])) throw NumericError("zoo: non-finite return");
    for (std::size_t k = 0; k < d; ++k) {
      const double sample = returns[i] * noise[i][k] / hp.sigma;
      diag.gradient[k] += sample;
      sum_sq[k] += sample * sample;
    }
  }
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < d; ++k) {
    const double mean = diag.gradient[k] / nd;
    const double var = std::max(0.0, (sum_sq[k] - nd * mean * mean) / (nd - 1.0));
    diag.gradient[k] = mean;
    diag.gradient_stderr[k] = std::sqrt(var / nd);
  }
  diag.best_return = *std::max_element(returns.begin(), returns.end());
  double total = 0.0;
  for (double r : returns) total += r;
  diag.mean_return = total / nd;
  diag.returns = std::move(returns);
  return diag;
}

template <class Policy>
struct ZooResult {
  Policy master;
  double best_return;
  ZooDiagnostics diagnostics;
};

/// One ZOO iteration: N perturbations, rollout each, master += alpha * g.
template <class Policy, Environment Env, class Plan = NoPlan>
ZooResult<Policy> zoo_iteration(const Policy& master, const Env& env, const HyperParams& hp, const EvalContext& ctx,
                                std::uint64_t generation, const Plan* plan = nullptr) {
  auto objective = [&](const std::vector<double>& params, std::size_t i) {
    auto rng = ctx.stream(generation, i, StreamTag::kRollout);
    const Policy perturbed = master.with_params(params);
    return discounted_return(detail::run_episode(perturbed, env, plan, rng), env.gamma());
  };
  auto diag = zoo_gradient(master.params(), objective, hp, ctx, generation);
  std::vector<double> params = master.params();
  for (std::size_t k = 0; k < params.size(); ++k) params[k] += hp.alpha * diag.gradient[k];
  const double best = diag.best_return;
  return {master.with_params(std::move(params)), best, std::move(diag)};
}

/// ZOO on a black-box objective over a raw parameter vector.
inline ZooResult<std::vector<double>> zoo_iteration(const std::vector<double>& master, const QuadraticBlackBox& objective,
                                                    const HyperParams& hp, const EvalContext& ctx,
                                                    std::uint64_t generation) {
  auto diag = zoo_gradient(master, [&](const std::vector<double>& params, std::size_t) { return objective(params); },
                           hp, ctx, generation);
  std::vector<double> params = master;
  for (std::size_t k = 0; k < params.size(); ++k) params[k] += hp.alpha * diag.gradient[k];
  const double best = diag.best_return;
  return {std::move(params), best, std::move(diag)};
}

}  // namespace arl
