#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "arl/algorithms.hpp"
#include "arl/oracle.hpp"
#include "bridge.hpp"

using namespace arl;

namespace {

using TabPop = Population<TableauPolicy, std::size_t>;

/// One state, two actions, one step: action 0 pays r0, action 1 pays r1.
FiniteMdp bandit(double r0, double r1) { return FiniteMdp::deterministic(1, 2, {r0, r1}, {0, 0}, 1.0, 1); }

TabPop frozen_population(const std::vector<std::pair<std::vector<double>, std::size_t>>& groups) {
  std::vector<TableauPolicy> policies;
  for (const auto& [row, count] : groups)
    for (std::size_t i = 0; i < count; ++i) policies.emplace_back(1, row.size(), row);
  return make_population<std::size_t>(std::move(policies));
}

double fraction_with(const TabPop& pop, double p0) {
  double n = 0;
  for (const auto& a : pop.agents) n += a.policy.probability(0, 0) == p0;
  return n / static_cast<double>(pop.size());
}

Trajectory<std::size_t> traj(std::vector<std::size_t> s, std::vector<std::size_t> a) {
  Trajectory<std::size_t> t;
  t.states = std::move(s);
  t.actions = std::move(a);
  t.rewards.assign(t.actions.size(), 0.0);
  t.states.push_back(0);
  return t;
}

std::vector<double> softmax_rows(const LogitTableauPolicy& p) {
  std::vector<double> out;
  for (std::size_t x = 0; x < p.state_count(); ++x)
    for (std::size_t a = 0; a < p.action_count(); ++a) out.push_back(p.probability(x, a));
  return out;
}

}  // namespace

TEST(FitnessWeights, EqualReturnsUniform) {
  const std::vector<double> r(5, 3.0);
  for (double w : fitness_weights(r, 2.0)) EXPECT_DOUBLE_EQ(w, 0.2);
}

TEST(FitnessWeights, TwoReturnExample) {
  const auto w = fitness_weights(std::vector<double>{1.0, 0.0}, 1.0);
  EXPECT_NEAR(w[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
  EXPECT_NEAR(w[0], 0.7311, 1e-4);
  EXPECT_NEAR(w[1], 0.2689, 1e-4);
}

TEST(FitnessWeights, ShiftInvariantBitForBit) {
  const std::vector<double> r = {0.5, 2.25, -1.0, 7.0};
  std::vector<double> shifted = r;
  for (double& v : shifted) v += 1024.0;
  EXPECT_EQ(fitness_weights(r, 0.7), fitness_weights(shifted, 0.7));
}

TEST(FitnessWeights, LargeBetaStable) {
  const auto w = fitness_weights(std::vector<double>{500.0, 499.0, 0.0}, 100.0);
  for (double v : w) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(w[0], 1.0, 1e-40);
}

TEST(FitnessWeights, BetaZeroUniform) {
  const auto w = fitness_weights(std::vector<double>{9.576, 0.0, 3.0, 1.0}, 0.0);
  for (double v : w) EXPECT_EQ(v, 0.25);
}

TEST(FitnessWeights, NonFiniteRejected) {
  EXPECT_THROW(fitness_weights(std::vector<double>{1.0, std::nan("")}, 1.0), InvalidInput);
  EXPECT_THROW(fitness_weights(std::vector<double>{std::numeric_limits<double>::infinity()}, 1.0), InvalidInput);
  EXPECT_THROW(fitness_weights(std::vector<double>{}, 1.0), InvalidInput);
}

TEST(Select, PointMass) {
  auto rng = make_stream(1, {0});
  for (std::size_t i : select(std::vector<double>{1.0, 0.0, 0.0}, 1000, rng)) EXPECT_EQ(i, 0u);
}

TEST(Select, UniformFrequencies) {
  auto rng = make_stream(2, {0});
  std::vector<double> counts(4, 0.0);
  const int n = 100000;
  for (std::size_t i : select(std::vector<double>{0.25, 0.25, 0.25, 0.25}, n, rng)) counts[i] += 1;
  for (double c : counts) EXPECT_NEAR(c / n, 0.25, 0.007);
}

TEST(Select, FitnessExampleFrequency) {
  auto rng = make_stream(3, {0});
  const auto w = fitness_weights(std::vector<double>{1.0, 0.0}, 1.0);
  const int n = 100000;
  double zero = 0;
  for (std::size_t i : select(w, n, rng)) zero += i == 0;
  EXPECT_NEAR(zero / n, 0.7311, 0.007);
}

TEST(Zoo, ZeroReturnsGiveZeroGradient) {
  HyperParams hp;
  hp.pop_size = 50;
  hp.alpha = 0.7;
  const EvalContext ctx{1, 0, 1};
  const std::vector<double> master = {0.3, -0.2};
  const auto diag = zoo_gradient(master, [](const std::vector<double>&, std::size_t) { return 0.0; }, hp, ctx, 0);
  EXPECT_EQ(diag.gradient, (std::vector<double>{0.0, 0.0}));
}

TEST(Zoo, QuadraticUnbiased) {
  HyperParams hp;
  hp.pop_size = 100000;
  hp.sigma = 0.1;
  hp.alpha = 0.0;
  const EvalContext ctx{5, 0, 1};
  const QuadraticBlackBox f(2);
  const std::vector<double> theta = {1.0, 0.0};
  const auto res = zoo_iteration(theta, f, hp, ctx, 0);
  EXPECT_EQ(res.master, theta);
  const auto want = f.smoothed_gradient(theta);
  for (std::size_t k = 0; k < 2; ++k)
    EXPECT_LE(std::abs(res.diagnostics.gradient[k] - want[k]), 3.0 * res.diagnostics.gradient_stderr[k]);
}

TEST(Zoo, UpdateIsAlphaTimesEstimate) {
  HyperParams hp;
  hp.pop_size = 20;
  hp.sigma = 0.1;
  hp.alpha = 0.25;
  const EvalContext ctx{6, 0, 1};
  const std::vector<double> theta = {0.5, -1.0, 2.0};
  const auto res = zoo_iteration(theta, QuadraticBlackBox(3), hp, ctx, 4);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_DOUBLE_EQ(res.master[k], theta[k] + 0.25 * res.diagnostics.gradient[k]);
  EXPECT_EQ(res.diagnostics.returns.size(), 20u);
}

TEST(Zoo, TableauAscent) {
  // Exact J of the updated master (reference DP) must rise in at least 95 of 100 seeded repeats.
  const auto env = two_state_env();
  const auto model = ref::from_env(env);
  HyperParams hp;
  hp.pop_size = 1000;
  hp.sigma = 0.2;
  hp.alpha = 0.01;
  const LogitTableauPolicy start(2, 2, {0.2, -0.1, 0.3, 0.4});
  const double j0 = ref::expected_return(model, ref::tableau(softmax_rows(start), 2));
  int increases = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const EvalContext ctx{seed, 0, 1};
    const auto res = zoo_iteration(start, env, hp, ctx, 0);
    increases += ref::expected_return(model, ref::tableau(softmax_rows(res.master), 2)) > j0;
  }
  EXPECT_GE(increases, 95);
}

TEST(Poga, BetaZeroSelectsUniformly) {
  const auto env = bandit(9.576, 0.0);
  auto pop = frozen_population({{{1.0, 0.0}, 5000}, {{0.0, 1.0}, 5000}});
  HyperParams hp;
  hp.beta = 0.0;
  hp.sigma = 0.0;
  hp.pop_size = pop.size();
  const auto next = poga_iteration(pop, env, hp, EvalContext{7, 0, 1});
  const double se = std::sqrt(0.25 / 10000);
  EXPECT_NEAR(fraction_with(next, 1.0), 0.5, 3 * se);
}

TEST(Poga, SigmaZeroReplicatorStep) {
  const auto env = bandit(9.576, 0.0);
  for (double beta : {1.0, 0.1}) {
    auto pop = frozen_population({{{1.0, 0.0}, 5000}, {{0.0, 1.0}, 5000}});
    HyperParams hp;
    hp.beta = beta;
    hp.sigma = 0.0;
    hp.pop_size = pop.size();
    const auto next = poga_iteration(pop, env, hp, EvalContext{8, 0, 1});
    const auto want = oracle::infinite_population_step(std::vector<double>{0.5, 0.5}, std::vector<double>{9.576, 0.0}, beta);
    EXPECT_NEAR(want[0], std::exp(9.576 * beta) / (std::exp(9.576 * beta) + 1.0), 1e-12);
    const double se = std::sqrt(want[0] * (1 - want[0]) / 10000);
    EXPECT_LE(std::abs(fraction_with(next, 1.0) - want[0]), 3 * se) << "beta " << beta;
  }
}

TEST(Poga, RepeatedSelectionConcentratesOnBest) {
  // Three frozen deterministic policies on a 3-armed bandit.
  const auto env = FiniteMdp::deterministic(1, 3, {1.0, 0.5, 0.0}, {0, 0, 0}, 1.0, 1);
  std::vector<TableauPolicy> policies;
  for (int i = 0; i < 900; ++i) {
    std::vector<double> row(3, 0.0);
    row[i % 3] = 1.0;
    policies.emplace_back(1, 3, row);
  }
  auto pop = make_population<std::size_t>(std::move(policies));
  HyperParams hp;
  hp.beta = 1.0;
  hp.sigma = 0.0;
  hp.pop_size = pop.size();
  std::vector<double> freqs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const std::vector<double> lambdas = {1.0, 0.5, 0.0};
  for (int g = 0; g < 20; ++g) {
    pop = poga_iteration(pop, env, hp, EvalContext{9, 0, 1});
    freqs = oracle::infinite_population_step(freqs, lambdas, hp.beta);
    EXPECT_EQ(pop.size(), 900u);
  }
  EXPECT_GT(freqs[0], 0.99);
  EXPECT_GT(fraction_with(pop, 1.0), 0.97);
}

TEST(Poga, PopulationInvariants) {
  const auto env = two_state_env(0.9, 10);
  std::vector<TableauPolicy> policies(40, TableauPolicy::uniform(2, 2));
  auto pop = make_population<std::size_t>(std::move(policies));
  HyperParams hp;
  hp.pop_size = 40;
  for (int g = 0; g < 5; ++g) {
    pop = poga_iteration(pop, env, hp, EvalContext{10, 0, 1});
    ASSERT_EQ(pop.size(), 40u);
    EXPECT_EQ(pop.generation, static_cast<std::size_t>(g + 1));
    for (const auto& a : pop.agents) {
      ASSERT_TRUE(a.parent.has_value());
      EXPECT_LT(*a.parent, 40u);
      EXPECT_EQ(a.ret, pop.evaluated_returns[*a.parent]);
    }
  }
}

TEST(Poga, JobsInvariance) {
  const auto env = two_state_env(0.9, 10);
  HyperParams hp;
  hp.pop_size = 64;
  auto a = make_population<std::size_t>(std::vector<TableauPolicy>(64, TableauPolicy::uniform(2, 2)));
  auto b = a;
  for (int g = 0; g < 3; ++g) {
    a = poga_iteration(a, env, hp, EvalContext{11, 2, 1});
    b = poga_iteration(b, env, hp, EvalContext{11, 2, 4});
  }
  EXPECT_EQ(a.evaluated_returns, b.evaluated_returns);
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(a.agents[i].policy.params(), b.agents[i].policy.params());
    EXPECT_EQ(a.agents[i].parent, b.agents[i].parent);
  }
}

TEST(Poga, SharedPlanIdenticalParamsIdenticalReturns) {
  // Stochastic kernel; deterministic policy; every agent identical.
  const FiniteMdp env(2, 2, {1.0, 0.0, 0.5, -1.0}, {0.3, 0.7, 0.6, 0.4, 0.5, 0.5, 0.9, 0.1}, 0.95, 12);
  auto pop = make_population<std::size_t>(std::vector<TableauPolicy>(50, TableauPolicy(2, 2, {1.0, 0.0, 0.0, 1.0})));
  HyperParams hp;
  hp.sigma = 0.0;
  hp.pop_size = 50;
  const EvalContext ctx{12, 0, 1};
  auto prng = ctx.stream(0, StreamTag::kPlan);
  const auto plan = sample_lifted_plan(env, env.horizon(), prng);
  const auto with_plan = poga_iteration(pop, env, hp, ctx, &plan);
  for (double r : with_plan.evaluated_returns) EXPECT_EQ(r, with_plan.evaluated_returns.front());
  const auto live = poga_iteration(pop, env, hp, ctx);
  bool differs = false;
  for (double r : live.evaluated_returns) differs = differs || r != live.evaluated_returns.front();
  EXPECT_TRUE(differs);
}

TEST(AncestralGradient, EmptyParentIsZero) {
  const TableauPolicy p(1, 2, {0.5, 0.5});
  EXPECT_EQ(ancestral_gradient(p, Trajectory<std::size_t>{}), (std::vector<double>{0.0, 0.0}));
}

TEST(AncestralGradient, SingleStateExampleMatchesPerTermDifferences) {
  const TableauPolicy p(1, 2, {0.5, 0.5});
  const auto parent = traj({0, 0, 0, 0}, {0, 0, 1, 0});
  const auto g = ancestral_gradient(p, parent);
  EXPECT_NEAR(g[0], 1.5, 1e-15);
  EXPECT_NEAR(g[1], 0.5, 1e-15);
  // Per-term finite differences of log p(a) in free coordinates.
  const double h = 1e-6;
  std::vector<double> fd(2, 0.0);
  for (std::size_t t = 0; t < parent.length(); ++t)
    for (std::size_t i = 0; i < 2; ++i) {
      auto plus = p.params(), minus = p.params();
      plus[i] += h;
      minus[i] -= h;
      const std::size_t a = parent.actions[t];
      fd[i] += (std::log(plus[a]) - std::log(minus[a])) / (2 * h) / parent.length();
    }
  EXPECT_NEAR(g[0], fd[0], 1e-8);
  EXPECT_NEAR(g[1], fd[1], 1e-8);
}

TEST(AncestralGradient, ZeroProbabilityParentActionIsSingular) {
  EXPECT_THROW(ancestral_gradient(TableauPolicy(1, 2, {1.0, 0.0}), traj({0}, {1})), SingularGradient);
}

TEST(AncestralLearning, AlphaZeroIsIdentity) {
  const TableauPolicy p(2, 2, {0.3, 0.7, 0.6, 0.4});
  EXPECT_EQ(ancestral_learning(p, traj({0, 1}, {1, 0}), 0.0).params(), p.params());
  const LinearSigmoidPolicy s({0.1, 0.2, 0.3, 0.4});
  Trajectory<CartState> ct;
  ct.states = {CartState{0.1, 0, 0.02, 0}, CartState{}};
  ct.actions = {0};
  ct.rewards = {1.0};
  EXPECT_EQ(ancestral_learning(s, ct, 0.0).params(), s.params());
}

TEST(AncestralLearning, TableauEqualsMixture) {
  auto rng = make_stream(13, {0});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> probs;
    for (int x = 0; x < 2; ++x) {
      const double u = rng.uniform(0.05, 0.95);
      probs.push_back(u);
      probs.push_back(1 - u);
    }
    const TableauPolicy p(2, 2, probs);
    std::vector<std::size_t> s, a;
    for (int t = 0; t < 8; ++t) {
      s.push_back(rng.uniform() < 0.5 ? 0 : 1);
      a.push_back(rng.uniform() < 0.5 ? 0 : 1);
    }
    const auto parent = traj(s, a);
    const double alpha = rng.uniform(0.0, 2.0);
    const auto pb = empirical_parent_policy(parent, 2, 2);
    std::vector<double> steps(2);
    for (std::size_t x = 0; x < 2; ++x) steps[x] = alpha * pb.visits(x) / 8.0;
    const auto q = ancestral_learning(p, parent, alpha);
    const auto m = mixture_update(p, pb, steps);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(q.params()[i], m.params()[i], 1e-10);
  }
}

TEST(AncestralLearning, SigmoidPushLeftRaisesLogit) {
  const LinearSigmoidPolicy p({0.2, -0.1, 0.5, 0.3});
  Trajectory<CartState> parent;
  parent.states = {CartState{0.0, 0.1, 0.05, 0.2}, CartState{0.01, 0.0, 0.08, 0.1}, CartState{0.02, -0.1, 0.03, 0.4},
                   CartState{}};
  parent.actions = {LinearSigmoidPolicy::kLeft, LinearSigmoidPolicy::kLeft, LinearSigmoidPolicy::kLeft};
  parent.rewards = {1, 1, 1};
  const auto q = ancestral_learning(p, parent, 0.5);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_GT(q.logit(parent.states[t]), p.logit(parent.states[t]));
    EXPECT_GT(q.probability(parent.states[t], LinearSigmoidPolicy::kLeft),
              p.probability(parent.states[t], LinearSigmoidPolicy::kLeft));
  }
}

TEST(Arl, GenerationZeroSkipsLearning) {
  const auto env = two_state_env(0.9, 10);
  std::vector<TableauPolicy> policies;
  auto rng = make_stream(14, {0});
  for (int i = 0; i < 30; ++i) {
    const double u = rng.uniform(0.1, 0.9);
    policies.emplace_back(2, 2, std::vector<double>{u, 1 - u, 1 - u, u});
  }
  const auto pop = make_population<std::size_t>(policies);
  HyperParams hp;
  hp.alpha = 5.0;
  hp.pop_size = 30;
  const auto next = arl_iteration(pop, env, hp, EvalContext{14, 0, 1});
  for (const auto& a : next.agents) EXPECT_EQ(a.policy.params(), policies[*a.parent].params());
  // Generation 1 does learn.
  const auto after = arl_iteration(next, env, hp, EvalContext{14, 0, 1});
  bool changed = false;
  for (const auto& a : after.agents) changed = changed || a.policy.params() != next.agents[*a.parent].policy.params();
  EXPECT_TRUE(changed);
}

TEST(Arl, AlphaZeroMatchesPogaSigmaZero) {
  const auto env = two_state_env(0.9, 10);
  auto rng = make_stream(15, {0});
  std::vector<TableauPolicy> policies;
  for (int i = 0; i < 40; ++i) {
    const double u = rng.uniform(0.1, 0.9);
    policies.emplace_back(2, 2, std::vector<double>{u, 1 - u, 0.5, 0.5});
  }
  auto a = make_population<std::size_t>(policies);
  auto b = a;
  HyperParams hp;
  hp.alpha = 0.0;
  hp.sigma = 0.0;
  hp.pop_size = 40;
  const EvalContext ctx{15, 1, 1};
  for (int g = 0; g < 4; ++g) {
    a = arl_iteration(a, env, hp, ctx);
    b = poga_iteration(b, env, hp, ctx);
    ASSERT_EQ(a.evaluated_returns, b.evaluated_returns);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(a.agents[i].parent, b.agents[i].parent);
  }
}

TEST(Arl, PopulationSizeConstantAndJobsInvariant) {
  const auto env = two_state_env(0.9, 10);
  HyperParams hp;
  hp.pop_size = 32;
  auto a = make_population<std::size_t>(std::vector<TableauPolicy>(32, TableauPolicy::uniform(2, 2)));
  auto b = a;
  for (int g = 0; g < 4; ++g) {
    a = arl_iteration(a, env, hp, EvalContext{16, 0, 1});
    b = arl_iteration(b, env, hp, EvalContext{16, 0, 3});
    ASSERT_EQ(a.size(), 32u);
  }
  EXPECT_EQ(a.evaluated_returns, b.evaluated_returns);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_EQ(a.agents[i].policy.params(), b.agents[i].policy.params());
}
