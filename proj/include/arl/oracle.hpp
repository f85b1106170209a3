#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "arl/errors.hpp"
#include "arl/mdp.hpp"
#include "arl/policy.hpp"
#include "arl/rng.hpp"

/// Exact enumeration over small finite MDPs: forward and backward path
/// probabilities, population fitness, the generalized V-function and its
/// KL-regularized recursion, and gradients of the population fitness.
namespace arl::oracle {

inline constexpr double kMaxPaths = 1e6;

struct Branch {
  std::size_t state;
  double prob;
};

/// Finite dynamics for enumeration: either a time-homogeneous kernel or
/// per-time deterministic maps taken from a lifted plan.
class PathModel {
 public:
  static PathModel from_env(const FiniteMdp& env) {
    PathModel m(env);
    const std::size_t n = env.state_count();
    m.branches_.resize(n * env.action_count());
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t a = 0; a < env.action_count(); ++a) {
        auto row = env.kernel_row(x, a);
        auto& out = m.branches_[x * env.action_count() + a];
        for (std::size_t y = 0; y < n; ++y)
          if (row[y] > 0.0) out.push_back({y, row[y]});
      }
    const auto init = env.initial_distribution();
    for (std::size_t y = 0; y < n; ++y)
      if (init[y] > 0.0) m.initial_.push_back({y, init[y]});
    m.deterministic_ = env.is_deterministic();
    return m;
  }

  /// Conditions the environment on one lifted plan; the result is
  /// deterministic with time-dependent transitions.
  static PathModel from_plan(const FiniteMdp& env, const FiniteLiftedPlan& plan) {
    if (plan.state_count() != env.state_count() || plan.action_count() != env.action_count())
      throw ConfigError("PathModel: plan does not match environment");
    if (plan.horizon() < env.horizon()) throw ConfigError("PathModel: plan shorter than horizon");
    PathModel m(env);
    m.time_dependent_ = true;
    const std::size_t n = env.state_count();
    const std::size_t k = env.action_count();
    m.branches_.resize(env.horizon() * n * k);
    for (std::size_t t = 0; t < env.horizon(); ++t)
      for (std::size_t x = 0; x < n; ++x)
        for (std::size_t a = 0; a < k; ++a) m.branches_[(t * n + x) * k + a].push_back({plan.map(t, x, a), 1.0});
    m.initial_.push_back({plan.initial_state(), 1.0});
    m.deterministic_ = true;
    return m;
  }

  std::size_t state_count() const { return n_states_; }
  std::size_t action_count() const { return n_actions_; }
  std::size_t horizon() const { return horizon_; }
  double gamma() const { return gamma_; }
  bool deterministic() const { return deterministic_; }
  double reward(std::size_t x, std::size_t a) const { return rewards_[x * n_actions_ + a]; }
  std::span<const Branch> initial() const { return initial_; }

  std::span<const Branch> branches(std::size_t t, std::size_t x, std::size_t a) const {
    const std::size_t base = time_dependent_ ? t * n_states_ * n_actions_ : 0;
    return branches_[base + x * n_actions_ + a];
  }

  std::size_t next(std::size_t t, std::size_t x, std::size_t a) const {
    auto b = branches(t, x, a);
    if (b.size() != 1) throw DomainError("PathModel: transition is not deterministic");
    return b.front().state;
  }

  std::size_t max_branching() const {
    std::size_t m = 1;
    for (const auto& b : branches_) m = std::max(m, b.size());
    return m;
  }

 private:
  explicit PathModel(const FiniteMdp& env)
      : n_states_(env.state_count()),
        n_actions_(env.action_count()),
        horizon_(env.horizon()),
        gamma_(env.gamma()),
        rewards_(env.state_count() * env.action_count()) {
    for (std::size_t x = 0; x < n_states_; ++x)
      for (std::size_t a = 0; a < n_actions_; ++a) rewards_[x * n_actions_ + a] = env.reward(x, a);
  }

  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t horizon_;
  double gamma_;
  bool time_dependent_ = false;
  bool deterministic_ = false;
  std::vector<double> rewards_;
  std::vector<std::vector<Branch>> branches_;
  std::vector<Branch> initial_;
};

/// Tableau of unnormalized action weights; lets the fitness be evaluated
/// off the simplex for free-coordinate finite differences.
struct RawTableau {
  std::size_t n_actions;
  std::span<const double> weights;
  double probability(std::size_t x, std::size_t a) const { return weights[x * n_actions + a]; }
};

struct PathEntry {
  std::vector<std::size_t> states;   // x^t .. x^T
  std::vector<std::size_t> actions;  // a^t .. a^{T-1}
  double forward = 0.0;              // P_F (conditional on x^t for suffixes)
  double ret = 0.0;                  // sum_{s >= t} gamma^s r(x^s, a^s)
  double backward = 0.0;             // P_B, once computed
};

struct PathTable {
  std::vector<PathEntry> entries;
  std::size_t horizon = 0;
  double gamma = 1.0;
  bool has_backward = false;
};

namespace detail {

inline void check_budget(const PathModel& m, std::size_t steps) {
  const double per_step = static_cast<double>(m.action_count() * m.max_branching());
  const double paths = std::pow(per_step, static_cast<double>(steps)) * static_cast<double>(m.initial().size());
  if (paths > kMaxPaths) throw ResourceError("oracle: enumeration would exceed the 1e6 path budget");
}

template <class Weights, class Visit>
void dfs(const PathModel& m, const Weights& w, std::size_t t, std::size_t x, long double prob, long double ret,
         long double discount, bool include_zero, std::vector<std::size_t>& states, std::vector<std::size_t>& actions,
         Visit& visit) {
  if (t == m.horizon()) {
    visit(states, actions, static_cast<double>(prob), static_cast<double>(ret));
    return;
  }
  for (std::size_t a = 0; a < m.action_count(); ++a) {
    const double p = w.probability(x, a);
    if (p <= 0.0 && !include_zero) continue;
    const long double r = ret + discount * m.reward(x, a);
    actions.push_back(a);
    for (const Branch& b : m.branches(t, x, a)) {
      states.push_back(b.state);
      dfs(m, w, t + 1, b.state, prob * p * b.prob, r, discount * m.gamma(), include_zero, states, actions, visit);
      states.pop_back();
    }
    actions.pop_back();
  }
}

/// Visits every suffix (x^t = x, a^t, x^{t+1}, ..., x^T) with its
/// conditional forward probability and discounted (absolute-time) return.
template <class Weights, class Visit>
void for_each_suffix(const PathModel& m, const Weights& w, std::size_t t, std::size_t x, bool include_zero,
                     Visit&& visit) {
  check_budget(m, m.horizon() - t);
  std::vector<std::size_t> states{x};
  std::vector<std::size_t> actions;
  const long double discount = std::pow(static_cast<long double>(m.gamma()), static_cast<long double>(t));
  dfs(m, w, t, x, 1.0L, 0.0L, discount, include_zero, states, actions, visit);
}

/// (1/beta) log sum_i p_i exp(beta v_i), shifted by max v for stability.
inline long double log_mean_exp(std::span<const double> probs, std::span<const double> values, double beta) {
  long double vmax = -std::numeric_limits<long double>::infinity();
  long double mass = 0.0L;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    vmax = std::max<long double>(vmax, values[i]);
    mass += probs[i];
  }
  if (mass <= 0.0L) throw DomainError("oracle: empty support");
  long double excess = 0.0L;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) excess += probs[i] * std::expm1(static_cast<long double>(beta) * (values[i] - vmax));
  return vmax + (std::log(mass) + std::log1p(excess / mass)) / beta;
}

template <class Weights>
void check_weights(const PathModel& m, const Weights& w) {
  if constexpr (requires { w.state_count(); w.action_count(); }) {
    if (w.state_count() != m.state_count() || w.action_count() != m.action_count())
      throw ConfigError("oracle: policy shape does not match model");
  }
}

}  // namespace detail

/// All positive-probability paths with P_F and R.
template <class Weights>
PathTable enumerate_paths(const PathModel& m, const Weights& policy) {
  detail::check_weights(m, policy);
  PathTable table;
  table.horizon = m.horizon();
  table.gamma = m.gamma();
  for (const Branch& init : m.initial()) {
    detail::for_each_suffix(m, policy, 0, init.state, false,
                            [&](const std::vector<std::size_t>& s, const std::vector<std::size_t>& a, double p, double r) {
                              table.entries.push_back(PathEntry{s, a, init.prob * p, r, 0.0});
                            });
  }
  return table;
}

template <class Weights>
PathTable enumerate_paths(const FiniteMdp& env, const Weights& policy) {
  return enumerate_paths(PathModel::from_env(env), policy);
}

inline std::vector<double> forward_probs(const PathTable& t) {
  std::vector<double> p;
  p.reserve(t.entries.size());
  for (const auto& e : t.entries) p.push_back(e.forward);
  return p;
}

inline std::vector<double> path_returns(const PathTable& t) {
  std::vector<double> r;
  r.reserve(t.entries.size());
  for (const auto& e : t.entries) r.push_back(e.ret);
  return r;
}

/// J = E_{P_F}[R].
inline double expected_return(const PathTable& table) {
  long double j = 0.0L;
  for (const auto& e : table.entries) j += static_cast<long double>(e.forward) * e.ret;
  return static_cast<double>(j);
}

/// lambda = (1/beta) log E_{P_F}[exp(beta R)].
inline double population_fitness(const PathTable& table, double beta) {
  if (!(beta > 0.0)) throw InvalidInput("population_fitness: beta must be > 0");
  return static_cast<double>(detail::log_mean_exp(forward_probs(table), path_returns(table), beta));
}

/// P_B ∝ exp(beta R) P_F, normalized. beta == 0 copies P_F.
inline PathTable backward_distribution(PathTable table, double beta) {
  if (!(beta >= 0.0)) throw InvalidInput("backward_distribution: beta must be >= 0");
  table.has_backward = true;
  if (beta == 0.0) {
    for (auto& e : table.entries) e.backward = e.forward;
    return table;
  }
  double rmax = -std::numeric_limits<double>::infinity();
  for (const auto& e : table.entries)
    if (e.forward > 0.0) rmax = std::max(rmax, e.ret);
  long double z = 0.0L;
  std::vector<long double> w(table.entries.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& e = table.entries[i];
    w[i] = e.forward > 0.0 ? e.forward * std::exp(static_cast<long double>(beta) * (e.ret - rmax)) : 0.0L;
    z += w[i];
  }
  for (std::size_t i = 0; i < w.size(); ++i) table.entries[i].backward = static_cast<double>(w[i] / z);
  return table;
}

/// KL(p || q) over aligned supports; p > 0 where q == 0 is a divergence.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInput("kl_divergence: size mismatch");
  long double kl = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw DomainError("kl_divergence: p is not absolutely continuous with respect to q");
    kl += static_cast<long double>(p[i]) * std::log(static_cast<long double>(p[i]) / q[i]);
  }
  return static_cast<double>(kl);
}

/// reachable[t][x] is true when x^t = x has positive forward probability.
template <class Weights>
std::vector<std::vector<bool>> reachable_states(const PathModel& m, const Weights& policy) {
  std::vector<std::vector<bool>> reach(m.horizon() + 1, std::vector<bool>(m.state_count(), false));
  for (const Branch& b : m.initial()) reach[0][b.state] = true;
  for (std::size_t t = 0; t < m.horizon(); ++t)
    for (std::size_t x = 0; x < m.state_count(); ++x) {
      if (!reach[t][x]) continue;
      for (std::size_t a = 0; a < m.action_count(); ++a) {
        if (policy.probability(x, a) <= 0.0) continue;
        for (const Branch& b : m.branches(t, x, a)) reach[t + 1][b.state] = true;
      }
    }
  return reach;
}

/// Every suffix from (t, x) in enumeration order, zero-probability ones included.
template <class Weights>
std::vector<PathEntry> suffix_paths(const PathModel& m, const Weights& policy, std::size_t t, std::size_t x) {
  if (t > m.horizon() || x >= m.state_count()) throw InvalidInput("suffix_paths: (t, x) out of range");
  std::vector<PathEntry> out;
  detail::for_each_suffix(m, policy, t, x, true,
                          [&](const std::vector<std::size_t>& s, const std::vector<std::size_t>& a, double p, double r) {
                            out.push_back(PathEntry{s, a, p, r, 0.0});
                          });
  return out;
}

/// P_B(suffix | x^t = x) ∝ exp(beta R^{t:}) P_F(suffix | x^t = x), aligned with suffix_paths.
inline std::vector<double> suffix_backward(std::span<const PathEntry> suffixes, double beta) {
  PathTable tmp;
  tmp.entries.assign(suffixes.begin(), suffixes.end());
  tmp = backward_distribution(std::move(tmp), beta);
  std::vector<double> pb;
  pb.reserve(suffixes.size());
  for (const auto& e : tmp.entries) pb.push_back(e.backward);
  return pb;
}

namespace detail {

template <class Weights>
void check_reachable(const PathModel& m, const Weights& policy, std::size_t t, std::size_t x) {
  if (t > m.horizon() || x >= m.state_count()) throw DomainError("oracle: (t, x) out of range");
  if (!reachable_states(m, policy)[t][x]) throw DomainError("oracle: state is unreachable at this time");
}

}  // namespace detail

/// V_pop^t(x) = (1/beta) log E_{P_F[.|x^t=x]}[exp(beta R^{t:})]; zero at t = T.
template <class Weights>
double generalized_v(const PathModel& m, const Weights& policy, std::size_t t, std::size_t x, double beta) {
  if (!(beta > 0.0)) throw InvalidInput("generalized_v: beta must be > 0");
  detail::check_reachable(m, policy, t, x);
  if (t == m.horizon()) return 0.0;
  const auto suffixes = suffix_paths(m, policy, t, x);
  std::vector<double> p, r;
  for (const auto& s : suffixes) {
    p.push_back(s.forward);
    r.push_back(s.ret);
  }
  return static_cast<double>(detail::log_mean_exp(p, r, beta));
}

/// E_{P_F[.|x^t=x]}[R^{t:}], the beta -> 0 counterpart of generalized_v.
template <class Weights>
double expected_return_to_go(const PathModel& m, const Weights& policy, std::size_t t, std::size_t x) {
  detail::check_reachable(m, policy, t, x);
  long double v = 0.0L;
  for (const auto& s : suffix_paths(m, policy, t, x)) v += static_cast<long double>(s.forward) * s.ret;
  return static_cast<double>(v);
}

/// E_P[R^{t:}] - (1/beta) KL(P || P_F[.|x^t=x]) for a distribution P aligned with suffix_paths.
template <class Weights>
double variational_value(const PathModel& m, const Weights& policy, std::size_t t, std::size_t x,
                         std::span<const double> dist, double beta) {
  if (!(beta > 0.0)) throw InvalidInput("variational_value: beta must be > 0");
  detail::check_reachable(m, policy, t, x);
  const auto suffixes = suffix_paths(m, policy, t, x);
  if (dist.size() != suffixes.size()) throw InvalidInput("variational_value: distribution size mismatch");
  long double mass = 0.0L;
  long double value = 0.0L;
  std::vector<double> pf;
  for (std::size_t i = 0; i < suffixes.size(); ++i) {
    if (!(dist[i] >= 0.0)) throw InvalidInput("variational_value: negative probability");
    mass += dist[i];
    value += static_cast<long double>(dist[i]) * suffixes[i].ret;
    pf.push_back(suffixes[i].forward);
  }
  if (std::abs(static_cast<double>(mass) - 1.0) > 1e-9) throw InvalidInput("variational_value: P does not sum to 1");
  return static_cast<double>(value) - kl_divergence(dist, pf) / beta;
}

struct BellmanResidual {
  double max_residual = 0.0;
  std::size_t worst_t = 0;
  std::size_t worst_x = 0;
};

/// Both sides of the KL-regularized recursion
///   V^t(x) = E_{P_B(a|x)}[gamma^t r(x,a) - (1/beta) log(P_B(a|x)/pi(a|x)) + V^{t+1}(f_t(x,a))]
/// at every reachable (t, x), with P_B(a|x) marginalized from the suffix
/// backward distribution. Returns the largest absolute discrepancy.
template <class Weights>
BellmanResidual bellman_residual_detail(const PathModel& m, const Weights& policy, double beta) {
  if (!(beta > 0.0)) throw InvalidInput("bellman_residual: beta must be > 0");
  if (!m.deterministic()) throw DomainError("bellman_residual: requires deterministic transitions");
  detail::check_weights(m, policy);
  const auto reach = reachable_states(m, policy);
  // V^{t}(x) for all reachable (t, x), computed by enumeration.
  std::vector<std::vector<double>> v(m.horizon() + 1, std::vector<double>(m.state_count(), 0.0));
  for (std::size_t t = 0; t < m.horizon(); ++t)
    for (std::size_t x = 0; x < m.state_count(); ++x)
      if (reach[t][x]) v[t][x] = generalized_v(m, policy, t, x, beta);

  BellmanResidual out;
  const double gamma_t0 = 1.0;
  double discount = gamma_t0;
  for (std::size_t t = 0; t < m.horizon(); ++t, discount *= m.gamma()) {
    for (std::size_t x = 0; x < m.state_count(); ++x) {
      if (!reach[t][x]) continue;
      const auto suffixes = suffix_paths(m, policy, t, x);
      const auto pb = suffix_backward(suffixes, beta);
      std::vector<long double> pb_action(m.action_count(), 0.0L);
      for (std::size_t i = 0; i < suffixes.size(); ++i) pb_action[suffixes[i].actions.front()] += pb[i];
      long double rhs = 0.0L;
      for (std::size_t a = 0; a < m.action_count(); ++a) {
        if (pb_action[a] <= 0.0L) continue;
        const long double pi = policy.probability(x, a);
        const std::size_t y = m.next(t, x, a);
        rhs += pb_action[a] * (static_cast<long double>(discount) * m.reward(x, a) -
                               std::log(pb_action[a] / pi) / beta + v[t + 1][y]);
      }
      const double residual = std::abs(static_cast<double>(rhs) - v[t][x]);
      if (residual > out.max_residual) out = {residual, t, x};
    }
  }
  return out;
}

template <class Weights>
double bellman_residual(const PathModel& m, const Weights& policy, double beta) {
  return bellman_residual_detail(m, policy, beta).max_residual;
}

enum class GradientMethod { kBackward, kFiniteDifference };

/// Coordinates for tableau gradients. kFree treats every pi(a|x) as an
/// independent coordinate; kSimplexTangent perturbs one entry and
/// renormalizes its row, i.e. differentiates along e_a - pi(.|x).
enum class TableauCoordinates { kFree, kSimplexTangent };

namespace detail {

inline std::vector<double> project_to_tangent(const TableauPolicy& policy, std::vector<double> g) {
  const std::size_t k = policy.action_count();
  for (std::size_t x = 0; x < policy.state_count(); ++x) {
    double mean = 0.0;
    for (std::size_t a = 0; a < k; ++a) mean += policy.probability(x, a) * g[x * k + a];
    for (std::size_t a = 0; a < k; ++a) g[x * k + a] -= mean;
  }
  return g;
}

/// (1/beta) E_{P_B}[sum_t grad log pi(a^t | x^t)].
template <class Policy>
std::vector<double> backward_gradient(const PathModel& m, const Policy& policy, double beta) {
  const auto table = backward_distribution(enumerate_paths(m, policy), beta);
  std::vector<long double> acc(policy.parameter_count(), 0.0L);
  for (const auto& e : table.entries) {
    for (std::size_t t = 0; t < e.actions.size(); ++t) {
      const auto g = policy.log_prob_grad(e.states[t], e.actions[t]);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<long double>(e.backward) * g[i];
    }
  }
  std::vector<double> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<double>(acc[i] / beta);
  return out;
}

}  // namespace detail

/// Gradient of lambda with respect to the tableau probabilities.
inline std::vector<double> grad_lambda(const PathModel& m, const TableauPolicy& policy, double beta,
                                       GradientMethod method,
                                       TableauCoordinates coords = TableauCoordinates::kSimplexTangent,
                                       double h = 1e-5) {
  if (!(beta > 0.0)) throw InvalidInput("grad_lambda: beta must be > 0");
  detail::check_weights(m, policy);
  if (method == GradientMethod::kBackward) {
    for (double p : policy.params())
      if (p <= 0.0) throw SingularGradient("grad_lambda: backward method needs strictly positive policy entries");
    auto g = detail::backward_gradient(m, policy, beta);
    return coords == TableauCoordinates::kFree ? g : detail::project_to_tangent(policy, std::move(g));
  }
  const std::size_t k = policy.action_count();
  const auto& base = policy.params();
  std::vector<double> grad(base.size());
  auto lambda_at = [&](const std::vector<double>& w) {
    return population_fitness(enumerate_paths(m, RawTableau{k, w}), beta);
  };
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> plus = base;
    std::vector<double> minus = base;
    plus[i] += h;
    minus[i] -= h;
    if (coords == TableauCoordinates::kSimplexTangent) {
      const std::size_t x = i / k;
      for (std::size_t a = 0; a < k; ++a) {
        plus[x * k + a] /= 1.0 + h;
        minus[x * k + a] /= 1.0 - h;
      }
    }
    grad[i] = (lambda_at(plus) - lambda_at(minus)) / (2.0 * h);
  }
  return grad;
}

/// Gradient of lambda for any policy exposing params()/with_params()/log_prob_grad().
template <class Policy>
std::vector<double> grad_lambda(const PathModel& m, const Policy& policy, double beta, GradientMethod method,
                                double h = 1e-5) {
  if (!(beta > 0.0)) throw InvalidInput("grad_lambda: beta must be > 0");
  if (method == GradientMethod::kBackward) return detail::backward_gradient(m, policy, beta);
  const auto& base = policy.params();
  std::vector<double> grad(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> plus = base;
    std::vector<double> minus = base;
    plus[i] += h;
    minus[i] -= h;
    const double up = population_fitness(enumerate_paths(m, policy.with_params(plus)), beta);
    const double down = population_fitness(enumerate_paths(m, policy.with_params(minus)), beta);
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/// Infinite-population replicator step p'(pi) ∝ exp(beta lambda(pi)) p(pi).
inline std::vector<double> infinite_population_step(std::span<const double> freqs, std::span<const double> lambdas,
                                                    double beta) {
  if (freqs.size() != lambdas.size() || freqs.empty())
    throw InvalidInput("infinite_population_step: size mismatch");
  double sum = 0.0;
  for (double p : freqs) {
    if (!(p >= 0.0)) throw InvalidInput("infinite_population_step: negative frequency");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("infinite_population_step: frequencies do not sum to 1");
  const double lmax = *std::max_element(lambdas.begin(), lambdas.end());
  std::vector<double> next(freqs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) z += (next[i] = std::exp(beta * (lambdas[i] - lmax)) * freqs[i]);
  for (double& p : next) p /= z;
  return next;
}

struct Estimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo mean over sampled lifted plans of the exact per-plan fitness
/// lambda(pi | plan). Deterministic environments need a single plan.
template <class Weights>
Estimate averaged_population_fitness(const FiniteMdp& env, const Weights& policy, double beta, std::size_t n_plans,
                                     RngStream& rng) {
  if (env.is_deterministic()) return {population_fitness(enumerate_paths(env, policy), beta), 0.0};
  if (n_plans < 2) throw InvalidInput("averaged_population_fitness: need at least 2 plans");
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 1; k <= n_plans; ++k) {
    const auto plan = sample_lifted_plan(env, env.horizon(), rng);
    const double value = population_fitness(enumerate_paths(PathModel::from_plan(env, plan), policy), beta);
    const double delta = value - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (value - mean);
  }
  const double n = static_cast<double>(n_plans);
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

}  // namespace arl::oracle
