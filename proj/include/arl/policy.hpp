#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "arl/errors.hpp"
#include "arl/mdp.hpp"
#include "arl/rng.hpp"

namespace arl {

/// Logistic function, evaluated on the branch that cannot overflow.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Per-state action probabilities used directly as the parameters.
/// params()[x * action_count() + a] == pi(a | x).
class TableauPolicy {
 public:
  using State = std::size_t;

  TableauPolicy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs)
      : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidInput("TableauPolicy: empty state or action space");
    if (probs_.size() != n_states_ * n_actions_) throw InvalidInput("TableauPolicy: wrong parameter count");
    for (std::size_t x = 0; x < n_states_; ++x) {
      double sum = 0.0;
      for (double p : row(x)) {
        if (!(p >= 0.0)) throw InvalidInput("TableauPolicy: negative or NaN probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw InvalidInput("TableauPolicy: row does not sum to 1");
    }
  }

  static TableauPolicy uniform(std::size_t n_states, std::size_t n_actions) {
    return TableauPolicy(n_states, n_actions,
                         std::vector<double>(n_states * n_actions, 1.0 / static_cast<double>(n_actions)));
  }

  std::size_t state_count() const { return n_states_; }
  std::size_t action_count() const { return n_actions_; }
  std::size_t parameter_count() const { return probs_.size(); }
  const std::vector<double>& params() const { return probs_; }

  TableauPolicy with_params(std::vector<double> params) const {
    return TableauPolicy(n_states_, n_actions_, std::move(params));
  }

  std::span<const double> row(State x) const { return {probs_.data() + x * n_actions_, n_actions_}; }

  double probability(State x, std::size_t a) const { return probs_[x * n_actions_ + a]; }

  std::vector<double> action_distribution(State x) const {
    if (x >= n_states_) throw InvalidInput("TableauPolicy: state out of range");
    auto r = row(x);
    return {r.begin(), r.end()};
  }

  /// Gradient of log pi(a|x) in probability coordinates: 1/pi(a|x) at (x, a).
  std::vector<double> log_prob_grad(State x, std::size_t a) const {
    check_pair(x, a);
    const double p = probability(x, a);
    if (p <= 0.0) throw SingularGradient("TableauPolicy: log_prob_grad at zero probability");
    std::vector<double> grad(probs_.size(), 0.0);
    grad[x * n_actions_ + a] = 1.0 / p;
    return grad;
  }

  void check_pair(State x, std::size_t a) const {
    if (x >= n_states_) throw InvalidInput("TableauPolicy: state out of range");
    if (a >= n_actions_) throw InvalidInput("TableauPolicy: action out of range");
  }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> probs_;
};

/// Softmax tableau: params are per-state logits.
class LogitTableauPolicy {
 public:
  using State = std::size_t;

  LogitTableauPolicy(std::size_t n_states, std::size_t n_actions, std::vector<double> logits)
      : n_states_(n_states), n_actions_(n_actions), logits_(std::move(logits)) {
    if (n_states_ == 0 || n_actions_ == 0) throw InvalidInput("LogitTableauPolicy: empty state or action space");
    if (logits_.size() != n_states_ * n_actions_) throw InvalidInput("LogitTableauPolicy: wrong parameter count");
    probs_.resize(logits_.size());
    for (std::size_t x = 0; x < n_states_; ++x) {
      const double* l = logits_.data() + x * n_actions_;
      double* p = probs_.data() + x * n_actions_;
      double max_logit = l[0];
      for (std::size_t a = 1; a < n_actions_; ++a) max_logit = std::max(max_logit, l[a]);
      if (!std::isfinite(max_logit)) throw InvalidInput("LogitTableauPolicy: non-finite logit");
      double z = 0.0;
      for (std::size_t a = 0; a < n_actions_; ++a) z += (p[a] = std::exp(l[a] - max_logit));
      for (std::size_t a = 0; a < n_actions_; ++a) p[a] /= z;
    }
  }

  static LogitTableauPolicy zeros(std::size_t n_states, std::size_t n_actions) {
    return LogitTableauPolicy(n_states, n_actions, std::vector<double>(n_states * n_actions, 0.0));
  }

  std::size_t state_count() const { return n_states_; }
  std::size_t action_count() const { return n_actions_; }
  std::size_t parameter_count() const { return logits_.size(); }
  const std::vector<double>& params() const { return logits_; }

  LogitTableauPolicy with_params(std::vector<double> params) const {
    return LogitTableauPolicy(n_states_, n_actions_, std::move(params));
  }

  double probability(State x, std::size_t a) const { return probs_[x * n_actions_ + a]; }

  std::vector<double> action_distribution(State x) const {
    if (x >= n_states_) throw InvalidInput("LogitTableauPolicy: state out of range");
    return {probs_.begin() + static_cast<std::ptrdiff_t>(x * n_actions_),
            probs_.begin() + static_cast<std::ptrdiff_t>((x + 1) * n_actions_)};
  }

  /// d log softmax_a / d logit_{x,b} = [a == b] - pi(b|x).
  std::vector<double> log_prob_grad(State x, std::size_t a) const {
    if (x >= n_states_ || a >= n_actions_) throw InvalidInput("LogitTableauPolicy: index out of range");
    if (probability(x, a) <= 0.0) throw SingularGradient("LogitTableauPolicy: log_prob_grad at zero probability");
    std::vector<double> grad(logits_.size(), 0.0);
    for (std::size_t b = 0; b < n_actions_; ++b)
      grad[x * n_actions_ + b] = (a == b ? 1.0 : 0.0) - probability(x, b);
    return grad;
  }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> logits_;
  std::vector<double> probs_;
};

/// Two-action policy pi(left|x) = sigmoid(theta . x). Action 0 is left, 1 is right.
class LinearSigmoidPolicy {
 public:
  static constexpr std::size_t kLeft = 0;
  static constexpr std::size_t kRight = 1;

  explicit LinearSigmoidPolicy(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.empty()) throw InvalidInput("LinearSigmoidPolicy: empty parameter vector");
    for (double v : theta_)
      if (!std::isfinite(v)) throw InvalidInput("LinearSigmoidPolicy: non-finite parameter");
  }

  std::size_t dimension() const { return theta_.size(); }
  std::size_t action_count() const { return 2; }
  std::size_t parameter_count() const { return theta_.size(); }
  const std::vector<double>& params() const { return theta_; }

  LinearSigmoidPolicy with_params(std::vector<double> params) const { return LinearSigmoidPolicy(std::move(params)); }

  double logit(std::span<const double> x) const {
    if (x.size() != theta_.size()) throw InvalidInput("LinearSigmoidPolicy: observation dimension mismatch");
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += theta_[i] * x[i];
    return z;
  }

  double probability(std::span<const double> x, std::size_t a) const {
    const double z = logit(x);
    return a == kLeft ? sigmoid(z) : sigmoid(-z);
  }

  std::vector<double> action_distribution(std::span<const double> x) const {
    const double z = logit(x);
    return {sigmoid(z), sigmoid(-z)};
  }

  std::vector<double> log_prob_grad(std::span<const double> x, std::size_t a) const {
    if (a > kRight) throw InvalidInput("LinearSigmoidPolicy: action out of range");
    const double z = logit(x);
    if ((a == kLeft ? sigmoid(z) : sigmoid(-z)) <= 0.0)
      throw SingularGradient("LinearSigmoidPolicy: log_prob_grad at zero probability");
    const double scale = a == kLeft ? sigmoid(-z) : -sigmoid(z);
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = scale * x[i];
    return grad;
  }

 private:
  std::vector<double> theta_;
};

/// Visit statistics of one parent trajectory: the joint pi_B(x, a) = count / T
/// and, for visited states, the conditional pi_B(a | x) = count(x, a) / count(x).
class EmpiricalParentPolicy {
 public:
  EmpiricalParentPolicy(std::size_t n_states, std::size_t n_actions, std::vector<std::size_t> counts)
      : n_states_(n_states), n_actions_(n_actions), counts_(std::move(counts)), visits_(n_states, 0) {
    if (counts_.size() != n_states_ * n_actions_) throw InvalidInput("EmpiricalParentPolicy: wrong count size");
    for (std::size_t x = 0; x < n_states_; ++x)
      for (std::size_t a = 0; a < n_actions_; ++a) visits_[x] += counts_[x * n_actions_ + a];
    total_ = std::accumulate(visits_.begin(), visits_.end(), std::size_t{0});
  }

  std::size_t state_count() const { return n_states_; }
  std::size_t action_count() const { return n_actions_; }
  std::size_t total() const { return total_; }
  std::size_t count(std::size_t x, std::size_t a) const { return counts_[x * n_actions_ + a]; }
  std::size_t visits(std::size_t x) const { return visits_[x]; }
  bool visited(std::size_t x) const { return visits_[x] > 0; }

  double joint(std::size_t x, std::size_t a) const {
    return total_ == 0 ? 0.0 : static_cast<double>(count(x, a)) / static_cast<double>(total_);
  }

  /// pi_B(a | x); only meaningful for visited states.
  double conditional(std::size_t x, std::size_t a) const {
    if (!visited(x)) throw DomainError("EmpiricalParentPolicy: conditional at unvisited state");
    return static_cast<double>(count(x, a)) / static_cast<double>(visits_[x]);
  }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> visits_;
  std::size_t total_ = 0;
};

inline EmpiricalParentPolicy empirical_parent_policy(const Trajectory<std::size_t>& parent, std::size_t n_states,
                                                     std::size_t n_actions) {
  if (parent.empty()) throw InvalidInput("empirical_parent_policy: empty parent trajectory");
  std::vector<std::size_t> counts(n_states * n_actions, 0);
  for (std::size_t t = 0; t < parent.actions.size(); ++t) {
    const std::size_t x = parent.states[t];
    const std::size_t a = parent.actions[t];
    if (x >= n_states || a >= n_actions) throw InvalidInput("empirical_parent_policy: index out of range");
    ++counts[x * n_actions + a];
  }
  return EmpiricalParentPolicy(n_states, n_actions, std::move(counts));
}

namespace detail {

inline void renormalize(std::span<double> row) {
  double sum = 0.0;
  for (double v : row) sum += v;
  for (double& v : row) v /= sum;
}

}  // namespace detail

/// Mixture pi'(a|x) ∝ pi(a|x) + alpha_x * pi_B(a|x) on every visited state,
/// with a per-state step alpha_x. Unvisited states are copied unchanged.
inline TableauPolicy mixture_update(const TableauPolicy& policy, const EmpiricalParentPolicy& parent,
                                    std::span<const double> alpha_per_state) {
  if (parent.state_count() != policy.state_count() || parent.action_count() != policy.action_count())
    throw ConfigError("mixture_update: parent statistics do not match policy shape");
  if (alpha_per_state.size() != policy.state_count()) throw InvalidInput("mixture_update: wrong step vector size");
  std::vector<double> probs = policy.params();
  const std::size_t n_actions = policy.action_count();
  for (std::size_t x = 0; x < policy.state_count(); ++x) {
    const double alpha = alpha_per_state[x];
    if (!(alpha >= 0.0)) throw InvalidInput("mixture_update: alpha must be >= 0");
    if (!parent.visited(x) || alpha == 0.0) continue;
    std::span<double> row(probs.data() + x * n_actions, n_actions);
    for (std::size_t a = 0; a < n_actions; ++a) row[a] += alpha * parent.conditional(x, a);
    detail::renormalize(row);
  }
  return policy.with_params(std::move(probs));
}

inline TableauPolicy mixture_update(const TableauPolicy& policy, const EmpiricalParentPolicy& parent, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidInput("mixture_update: alpha must be >= 0");
  std::vector<double> steps(policy.state_count(), alpha);
  return mixture_update(policy, parent, steps);
}

/// Natural-gradient step on the tableau: theta + alpha * I(pi)^-1 g, where g
/// is the (1/T)-scaled sum of log-probability gradients along the parent
/// trajectory and I(pi)_{a,a'} = delta_{a,a'} / pi(a|x). Rows touched by the
/// parent are renormalized. Equals mixture_update with alpha_x = alpha *
/// visits(x) / T.
inline TableauPolicy natural_gradient_tableau(const TableauPolicy& policy, const Trajectory<std::size_t>& parent,
                                              double alpha) {
  if (!(alpha >= 0.0)) throw InvalidInput("natural_gradient_tableau: alpha must be >= 0");
  if (parent.empty() || alpha == 0.0) return policy;
  const std::size_t n_actions = policy.action_count();
  const double inv_t = 1.0 / static_cast<double>(parent.length());
  std::vector<double> gradient(policy.parameter_count(), 0.0);
  std::vector<bool> touched(policy.state_count(), false);
  for (std::size_t t = 0; t < parent.length(); ++t) {
    const std::size_t x = parent.states[t];
    const std::size_t a = parent.actions[t];
    policy.check_pair(x, a);
    if (policy.probability(x, a) <= 0.0)
      throw SingularGradient("natural_gradient_tableau: parent action has zero probability (singular metric)");
    const auto g = policy.log_prob_grad(x, a);
    gradient[x * n_actions + a] += inv_t * g[x * n_actions + a];
    touched[x] = true;
  }
  std::vector<double> probs = policy.params();
  for (std::size_t x = 0; x < policy.state_count(); ++x) {
    if (!touched[x]) continue;
    std::span<double> row(probs.data() + x * n_actions, n_actions);
    // Inverse Fisher metric is diag(pi(.|x)).
    for (std::size_t a = 0; a < n_actions; ++a) row[a] += alpha * policy.probability(x, a) * gradient[x * n_actions + a];
    detail::renormalize(row);
  }
  return policy.with_params(std::move(probs));
}

/// params + sigma * eps with eps ~ N(0, I); eps is returned alongside.
inline std::pair<std::vector<double>, std::vector<double>> perturb_params(std::span<const double> params, double sigma,
                                                                          RngStream& rng) {
  if (!(sigma >= 0.0)) throw InvalidInput("perturb_params: sigma must be >= 0");
  std::vector<double> noise(params.size());
  std::vector<double> perturbed(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    noise[i] = rng.normal();
    perturbed[i] = params[i] + sigma * noise[i];
  }
  return {std::move(perturbed), std::move(noise)};
}

/// Gaussian mutation. Tableau rows are perturbed in log space and passed
/// back through softmax so they stay on the simplex.
inline TableauPolicy mutate(const TableauPolicy& policy, double sigma, RngStream& rng) {
  if (sigma == 0.0) return policy;
  const std::size_t n_actions = policy.action_count();
  std::vector<double> probs = policy.params();
  for (std::size_t x = 0; x < policy.state_count(); ++x) {
    std::span<double> row(probs.data() + x * n_actions, n_actions);
    double max_logit = -INFINITY;
    std::vector<double> logits(n_actions);
    for (std::size_t a = 0; a < n_actions; ++a) {
      logits[a] = row[a] > 0.0 ? std::log(row[a]) + sigma * rng.normal() : -INFINITY;
      max_logit = std::max(max_logit, logits[a]);
    }
    for (std::size_t a = 0; a < n_actions; ++a) row[a] = std::exp(logits[a] - max_logit);
    detail::renormalize(row);
  }
  return policy.with_params(std::move(probs));
}

template <class Policy>
  requires requires(const Policy& p) {
    p.params();
    p.with_params(std::vector<double>{});
  }
Policy mutate(const Policy& policy, double sigma, RngStream& rng) {
  if (sigma == 0.0) return policy;
  return policy.with_params(perturb_params(policy.params(), sigma, rng).first);
}

}  // namespace arl
