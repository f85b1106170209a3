#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arl/algorithms.hpp"
#include "arl/environments.hpp"
#include "arl/mdp.hpp"
#include "arl/oracle.hpp"
#include "arl/policy.hpp"
#include "arl/rng.hpp"

/// Identity checks run by `arl verify`. Every check is seeded and exact
/// except where a Monte-Carlo tolerance is stated.
namespace arl::verify {

struct CheckResult {
  std::string check;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t instances = 0;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"theorem1", "theorem2",     "lemma1",      "variational",
                                                 "lifted",   "natgrad",      "zoo_unbiased", "beta_limit"};
  return names;
}

inline constexpr std::uint64_t kDefaultSeed = 20240607;

/// Small random finite instance. Deterministic models come either from a
/// deterministic MDP or from a stochastic MDP conditioned on one lifted plan.
struct Instance {
  FiniteMdp env;
  std::optional<FiniteLiftedPlan> plan;
  TableauPolicy policy;
  double beta;

  oracle::PathModel model() const {
    return plan ? oracle::PathModel::from_plan(env, *plan) : oracle::PathModel::from_env(env);
  }
};

inline std::vector<double> random_simplex(std::size_t n, double floor, RngStream& rng) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& v : p) sum += (v = rng.uniform(floor, 1.0));
  for (double& v : p) v /= sum;
  return p;
}

inline TableauPolicy random_tableau(std::size_t n_states, std::size_t n_actions, RngStream& rng, double floor = 0.05) {
  std::vector<double> probs;
  for (std::size_t x = 0; x < n_states; ++x) {
    auto row = random_simplex(n_actions, floor, rng);
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return TableauPolicy(n_states, n_actions, std::move(probs));
}

/// index selects beta from {0.1, 1, 5}; odd indices use a lifted plan over a stochastic kernel.
inline Instance random_instance(std::uint64_t seed, std::size_t index, std::size_t max_horizon = 6) {
  static constexpr double kBetas[] = {0.1, 1.0, 5.0};
  auto rng = make_stream(seed, {index, tag(StreamTag::kTest)});
  const std::size_t n_states = 1 + static_cast<std::size_t>(rng.uniform() * 3.0) % 3;
  const std::size_t n_actions = 2;
  const std::size_t horizon = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_horizon)) % max_horizon;
  const double gamma = rng.uniform(0.5, 1.0);
  std::vector<double> rewards(n_states * n_actions);
  for (double& r : rewards) r = rng.uniform(-1.0, 1.0);
  const auto initial = random_simplex(n_states, 0.0, rng);
  TableauPolicy policy = random_tableau(n_states, n_actions, rng);
  const double beta = kBetas[index % 3];
  if (index % 2 == 0) {
    std::vector<std::size_t> next(n_states * n_actions);
    for (auto& y : next) y = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_states)) % n_states;
    const std::size_t x0 = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_states)) % n_states;
    return {FiniteMdp::deterministic(n_states, n_actions, rewards, next, gamma, horizon, x0), std::nullopt,
            std::move(policy), beta};
  }
  std::vector<double> kernel;
  for (std::size_t i = 0; i < n_states * n_actions; ++i) {
    auto row = random_simplex(n_states, 0.0, rng);
    kernel.insert(kernel.end(), row.begin(), row.end());
  }
  FiniteMdp env(n_states, n_actions, rewards, kernel, gamma, horizon, initial);
  auto plan = sample_lifted_plan(env, horizon, rng);
  return {std::move(env), std::move(plan), std::move(policy), beta};
}

inline Trajectory<std::size_t> as_trajectory(const oracle::PathEntry& e) {
  Trajectory<std::size_t> traj;
  traj.states = e.states;
  traj.actions = e.actions;
  traj.rewards.assign(e.actions.size(), 0.0);
  return traj;
}

/// E_{P_B}[ancestral_gradient] computed exactly from the enumerated table.
inline std::vector<double> expected_ancestral_gradient(const oracle::PathModel& m, const TableauPolicy& policy,
                                                       double beta) {
  const auto table = oracle::backward_distribution(oracle::enumerate_paths(m, policy), beta);
  std::vector<long double> acc(policy.parameter_count(), 0.0L);
  for (const auto& e : table.entries) {
    const auto g = ancestral_gradient(policy, as_trajectory(e));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<long double>(e.backward) * g[i];
  }
  return {acc.begin(), acc.end()};
}

inline std::vector<double> tangent_projection(const TableauPolicy& policy, std::vector<double> g) {
  const std::size_t k = policy.action_count();
  for (std::size_t x = 0; x < policy.state_count(); ++x) {
    double mean = 0.0;
    for (std::size_t a = 0; a < k; ++a) mean += policy.probability(x, a) * g[x * k + a];
    for (std::size_t a = 0; a < k; ++a) g[x * k + a] -= mean;
  }
  return g;
}

struct Theorem1Comparison {
  double cosine = 0.0;
  double ratio_spread = 0.0;  // (max - min) / |mean| of fd_i / anc_i over significant coordinates
  double ratio_mean = 0.0;
  double expected_ratio = 0.0;  // T / beta
  double scaled_error = 0.0;    // |fd - (T/beta) anc|_inf / |fd|_inf
  bool degenerate = false;      // gradient identically ~0
};

/// Compares the exact expected ancestral gradient with the finite-difference
/// gradient of lambda, both in simplex-tangent coordinates.
inline Theorem1Comparison compare_theorem1(const Instance& inst, double significance = 1e-3) {
  const auto m = inst.model();
  const auto fd = oracle::grad_lambda(m, inst.policy, inst.beta, oracle::GradientMethod::kFiniteDifference,
                                      oracle::TableauCoordinates::kSimplexTangent);
  const auto anc = tangent_projection(inst.policy, expected_ancestral_gradient(m, inst.policy, inst.beta));
  Theorem1Comparison c;
  c.expected_ratio = static_cast<double>(m.horizon()) / inst.beta;
  double dot = 0.0, nf = 0.0, na = 0.0, fd_max = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    dot += fd[i] * anc[i];
    nf += fd[i] * fd[i];
    na += anc[i] * anc[i];
    fd_max = std::max(fd_max, std::abs(fd[i]));
  }
  if (fd_max < 1e-9) {
    c.degenerate = true;
    c.cosine = 1.0;
    double anc_max = 0.0;
    for (double v : anc) anc_max = std::max(anc_max, std::abs(v));
    c.scaled_error = anc_max * c.expected_ratio;
    c.ratio_mean = c.expected_ratio;
    return c;
  }
  c.cosine = dot / std::sqrt(nf * na);
  double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin, rsum = 0.0;
  std::size_t count = 0;
  double err = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    err = std::max(err, std::abs(fd[i] - c.expected_ratio * anc[i]));
    if (std::abs(fd[i]) < significance * fd_max) continue;
    const double r = fd[i] / anc[i];
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    rsum += r;
    ++count;
  }
  c.ratio_mean = rsum / static_cast<double>(count);
  c.ratio_spread = (rmax - rmin) / std::abs(c.ratio_mean);
  c.scaled_error = err / fd_max;
  return c;
}

inline std::vector<CheckResult> check_theorem1(std::uint64_t seed = kDefaultSeed, std::size_t n = 24) {
  double worst_cos = 0.0, worst_ratio = 0.0, worst_scaled = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = compare_theorem1(random_instance(seed, i));
    worst_cos = std::max(worst_cos, 1.0 - c.cosine);
    worst_ratio = std::max(worst_ratio, c.ratio_spread);
    worst_scaled = std::max(worst_scaled, c.scaled_error);
  }
  return {{"theorem1_cosine_gap", worst_cos, 1e-8, worst_cos <= 1e-8, n},
          {"theorem1_ratio_spread", worst_ratio, 1e-6, worst_ratio <= 1e-6, n},
          {"theorem1_scaled_equality", worst_scaled, 1e-6, worst_scaled <= 1e-6, n}};
}

inline std::vector<CheckResult> check_theorem2(std::uint64_t seed = kDefaultSeed, std::size_t n = 24) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto inst = random_instance(seed, i);
    worst = std::max(worst, oracle::bellman_residual(inst.model(), inst.policy, inst.beta));
  }
  return {{"theorem2_bellman_residual", worst, 1e-10, worst <= 1e-10, n}};
}

/// Replicator iteration over three tableau policies on the two-state
/// environment (T = 10); returns the number of steps the lambda-maximizer
/// needs to pass 1 - 1e-6, or max_steps + 1 when it never does.
inline std::size_t replicator_steps_to_dominance(double beta, std::size_t max_steps = 200,
                                                 bool* monotone = nullptr) {
  const auto env = two_state_env(0.9, 10);
  const std::vector<TableauPolicy> policies = {
      TableauPolicy(2, 2, {0.0, 1.0, 1.0, 0.0}),  // stay at x0, leave x1
      TableauPolicy(2, 2, {1.0, 0.0, 1.0, 0.0}),  // always switch
      TableauPolicy(2, 2, {0.2, 0.8, 0.6, 0.4}),
  };
  std::vector<double> lambdas;
  for (const auto& p : policies) lambdas.push_back(oracle::population_fitness(oracle::enumerate_paths(env, p), beta));
  const std::size_t best =
      static_cast<std::size_t>(std::max_element(lambdas.begin(), lambdas.end()) - lambdas.begin());
  std::vector<double> freqs(policies.size(), 1.0 / static_cast<double>(policies.size()));
  bool mono = true;
  for (std::size_t step = 1; step <= max_steps; ++step) {
    const auto next = oracle::infinite_population_step(freqs, lambdas, beta);
    if (next[best] < freqs[best]) mono = false;
    freqs = next;
    if (freqs[best] > 1.0 - 1e-6) {
      if (monotone) *monotone = mono;
      return step;
    }
  }
  if (monotone) *monotone = mono;
  return max_steps + 1;
}

inline std::vector<CheckResult> check_lemma1() {
  std::vector<CheckResult> out;
  for (double beta : {0.5, 1.0, 2.0}) {
    bool monotone = false;
    const auto steps = replicator_steps_to_dominance(beta, 200, &monotone);
    char name[64];
    std::snprintf(name, sizeof name, "lemma1_steps_beta_%g", beta);
    out.push_back({name, static_cast<double>(steps), 200.0, steps <= 200 && monotone, 1});
  }
  return out;
}

inline std::vector<CheckResult> check_variational(std::uint64_t seed = kDefaultSeed, std::size_t n = 20,
                                                  std::size_t alternatives = 100) {
  double equality = 0.0;
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto inst = random_instance(seed, i);
    const auto m = inst.model();
    const auto reach = oracle::reachable_states(m, inst.policy);
    auto rng = make_stream(seed, {i, 7, tag(StreamTag::kTest)});
    for (std::size_t t = 0; t < m.horizon(); ++t)
      for (std::size_t x = 0; x < m.state_count(); ++x) {
        if (!reach[t][x]) continue;
        const auto suffixes = oracle::suffix_paths(m, inst.policy, t, x);
        const auto pb = oracle::suffix_backward(suffixes, inst.beta);
        const double v = oracle::generalized_v(m, inst.policy, t, x, inst.beta);
        equality = std::max(equality, std::abs(oracle::variational_value(m, inst.policy, t, x, pb, inst.beta) - v));
        for (std::size_t k = 0; k < alternatives; ++k) {
          // Mix P_B with a random distribution supported where P_F > 0.
          const double eps = k % 4 == 0 ? 1.0 : rng.uniform();
          std::vector<double> q(suffixes.size());
          double z = 0.0;
          for (std::size_t s = 0; s < q.size(); ++s) z += (q[s] = suffixes[s].forward > 0.0 ? rng.uniform() : 0.0);
          for (std::size_t s = 0; s < q.size(); ++s) q[s] = (1.0 - eps) * pb[s] + eps * q[s] / z;
          excess = std::max(excess, oracle::variational_value(m, inst.policy, t, x, q, inst.beta) - v);
        }
      }
  }
  return {{"variational_equality_at_pb", equality, 1e-10, equality <= 1e-10, n},
          {"variational_max_excess", excess, 1e-12, excess <= 1e-12, n}};
}

/// The stochastic two-state MDP used for the lifted-plan law check.
inline FiniteMdp lifted_check_env() {
  // kernel[x][a] = P(. | x, a)
  std::vector<double> kernel = {0.7, 0.3, 0.2, 0.8, 0.4, 0.6, 0.9, 0.1};
  return FiniteMdp(2, 2, {1.0, 0.0, 0.5, 0.2}, kernel, 1.0, 3);
}

inline TableauPolicy lifted_check_policy() { return TableauPolicy(2, 2, {0.6, 0.4, 0.3, 0.7}); }

inline std::uint64_t path_key(const Trajectory<std::size_t>& traj) {
  std::uint64_t key = 1;
  for (std::size_t t = 0; t < traj.actions.size(); ++t) key = (key * 4 + traj.states[t]) * 4 + traj.actions[t];
  return key * 4 + traj.states.back();
}

struct LiftedLawResult {
  double tv_lifted_live = 0.0;
  double tv_lifted_exact = 0.0;
  double tv_live_exact = 0.0;
  std::size_t adds_violations = 0;
};

inline LiftedLawResult lifted_law(std::uint64_t seed = kDefaultSeed, std::size_t samples = 100000) {
  const auto env = lifted_check_env();
  const auto policy = lifted_check_policy();
  std::map<std::uint64_t, double> lifted, live, exact;
  for (const auto& e : oracle::enumerate_paths(env, policy).entries) {
    Trajectory<std::size_t> t;
    t.states = e.states;
    t.actions = e.actions;
    exact[path_key(t)] += e.forward;
  }
  const double w = 1.0 / static_cast<double>(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    auto plan_rng = make_stream(seed, {1, i, tag(StreamTag::kPlan)});
    auto act_rng = make_stream(seed, {1, i, tag(StreamTag::kRollout)});
    const auto plan = sample_lifted_plan(env, env.horizon(), plan_rng);
    lifted[path_key(rollout(policy, env, env.horizon(), plan, act_rng))] += w;
    auto live_rng = make_stream(seed, {2, i, tag(StreamTag::kRollout)});
    live[path_key(rollout(policy, env, env.horizon(), live_rng))] += w;
  }
  auto tv = [](const std::map<std::uint64_t, double>& a, const std::map<std::uint64_t, double>& b) {
    std::map<std::uint64_t, double> diff(a);
    for (const auto& [k, v] : b) diff[k] -= v;
    double s = 0.0;
    for (const auto& [k, v] : diff) s += std::abs(v);
    return 0.5 * s;
  };
  LiftedLawResult r;
  r.tv_lifted_live = tv(lifted, live);
  r.tv_lifted_exact = tv(lifted, exact);
  r.tv_live_exact = tv(live, exact);

  // ADDS: under one shared plan, identical (x, a) prefixes give identical next states.
  const std::vector<TableauPolicy> population = {policy, TableauPolicy::uniform(2, 2),
                                                 TableauPolicy(2, 2, {0.9, 0.1, 0.5, 0.5})};
  for (std::size_t p = 0; p < 200; ++p) {
    auto plan_rng = make_stream(seed, {3, p, tag(StreamTag::kPlan)});
    const auto plan = sample_lifted_plan(env, env.horizon(), plan_rng);
    std::map<std::vector<std::size_t>, std::size_t> next_of_prefix;
    for (std::size_t agent = 0; agent < 60; ++agent) {
      auto rng = make_stream(seed, {3, p, agent, tag(StreamTag::kRollout)});
      const auto traj = rollout(population[agent % population.size()], env, env.horizon(), plan, rng);
      std::vector<std::size_t> prefix;
      for (std::size_t t = 0; t < traj.actions.size(); ++t) {
        prefix.push_back(traj.states[t]);
        prefix.push_back(traj.actions[t]);
        auto [it, inserted] = next_of_prefix.emplace(prefix, traj.states[t + 1]);
        if (!inserted && it->second != traj.states[t + 1]) ++r.adds_violations;
      }
    }
  }
  return r;
}

inline std::vector<CheckResult> check_lifted(std::uint64_t seed = kDefaultSeed) {
  const auto r = lifted_law(seed);
  return {{"lifted_tv_plan_vs_live", r.tv_lifted_live, 0.02, r.tv_lifted_live <= 0.02, 100000},
          {"lifted_adds_violations", static_cast<double>(r.adds_violations), 0.0, r.adds_violations == 0, 200}};
}

/// max |ancestral_learning - mixture_update| over random (policy, trajectory) pairs,
/// with the mixture step alpha_x = alpha * visits(x) / T.
inline double natgrad_discrepancy(std::uint64_t seed = kDefaultSeed, std::size_t pairs = 1000) {
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    auto rng = make_stream(seed, {4, i, tag(StreamTag::kTest)});
    const std::size_t n_states = 1 + static_cast<std::size_t>(rng.uniform() * 3.0) % 3;
    const std::size_t n_actions = 2 + static_cast<std::size_t>(rng.uniform() * 2.0) % 2;
    const auto policy = random_tableau(n_states, n_actions, rng, 0.01);
    const std::size_t length = 1 + static_cast<std::size_t>(rng.uniform() * 12.0) % 12;
    Trajectory<std::size_t> traj;
    for (std::size_t t = 0; t < length; ++t) {
      traj.states.push_back(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_states)) % n_states);
      traj.actions.push_back(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n_actions)) % n_actions);
      traj.rewards.push_back(0.0);
    }
    traj.states.push_back(0);
    const double alpha = rng.uniform(0.0, 2.0);
    const auto learned = ancestral_learning(policy, traj, alpha);
    const auto parent = empirical_parent_policy(traj, n_states, n_actions);
    std::vector<double> steps(n_states);
    for (std::size_t x = 0; x < n_states; ++x)
      steps[x] = alpha * static_cast<double>(parent.visits(x)) / static_cast<double>(length);
    const auto mixed = mixture_update(policy, parent, steps);
    for (std::size_t k = 0; k < learned.params().size(); ++k)
      worst = std::max(worst, std::abs(learned.params()[k] - mixed.params()[k]));
  }
  return worst;
}

inline std::vector<CheckResult> check_natgrad(std::uint64_t seed = kDefaultSeed) {
  const double d = natgrad_discrepancy(seed);
  return {{"natgrad_mixture_discrepancy", d, 1e-10, d <= 1e-10, 1000}};
}

/// Largest |g_k - (-2 theta_k)| / stderr_k over coordinates at theta = (1, 0).
inline double zoo_unbiased_zscore(std::uint64_t seed = kDefaultSeed, std::size_t n = 100000) {
  HyperParams hp;
  hp.sigma = 0.1;
  hp.pop_size = n;
  const std::vector<double> theta = {1.0, 0.0};
  const QuadraticBlackBox objective(2);
  const EvalContext ctx{seed, 0, 1};
  const auto diag = zoo_gradient(theta, [&](const std::vector<double>& p, std::size_t) { return objective(p); }, hp,
                                 ctx, 0);
  const auto expected = objective.smoothed_gradient(theta);
  double worst = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k)
    worst = std::max(worst, std::abs(diag.gradient[k] - expected[k]) / diag.gradient_stderr[k]);
  return worst;
}

inline std::vector<CheckResult> check_zoo_unbiased(std::uint64_t seed = kDefaultSeed) {
  const double z = zoo_unbiased_zscore(seed);
  return {{"zoo_unbiased_max_zscore", z, 3.0, z <= 3.0, 1}};
}

/// max |lambda - J| at a small beta over random instances.
inline double beta_limit_gap(double beta = 1e-5, std::uint64_t seed = kDefaultSeed, std::size_t n = 20) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto inst = random_instance(seed, i);
    const auto table = oracle::enumerate_paths(inst.model(), inst.policy);
    worst = std::max(worst, std::abs(oracle::population_fitness(table, beta) - oracle::expected_return(table)));
  }
  return worst;
}

inline std::vector<CheckResult> check_beta_limit(std::uint64_t seed = kDefaultSeed) {
  const double gap = beta_limit_gap(1e-5, seed);
  return {{"beta_limit_lambda_vs_j", gap, 1e-4, gap <= 1e-4, 20}};
}

/// Runs one named suite, or every suite for "all".
inline std::vector<CheckResult> run_suite(const std::string& name, std::uint64_t seed = kDefaultSeed) {
  if (name == "all") {
    std::vector<CheckResult> out;
    for (const auto& s : suite_names()) {
      auto part = run_suite(s, seed);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  if (name == "theorem1") return check_theorem1(seed);
  if (name == "theorem2") return check_theorem2(seed);
  if (name == "lemma1") return check_lemma1();
  if (name == "variational") return check_variational(seed);
  if (name == "lifted") return check_lifted(seed);
  if (name == "natgrad") return check_natgrad(seed);
  if (name == "zoo_unbiased") return check_zoo_unbiased(seed);
  if (name == "beta_limit") return check_beta_limit(seed);
  throw InvalidInput("unknown verify suite '" + name + "'");
}

}  // namespace arl::verify
