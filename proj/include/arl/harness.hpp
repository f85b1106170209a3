#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "arl/algorithms.hpp"
#include "arl/environments.hpp"
#include "arl/errors.hpp"
#include "arl/mdp.hpp"
#include "arl/policy.hpp"
#include "arl/policy_io.hpp"
#include "arl/rng.hpp"

namespace arl {

struct ExperimentConfig {
  std::string algorithm = "arl";
  std::string env = "two_state";
  HyperParams hp;
  std::optional<double> gamma;
  std::optional<std::size_t> horizon;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  bool lifted_plan = false;
  std::string out;
  std::size_t window = 5;
  std::size_t jobs = 1;
  double init_scale = 0.5;
  bool timing = false;
  std::string checkpoint;
  std::size_t dimension = 2;

  void validate() const {
    if (algorithm != "zoo" && algorithm != "poga" && algorithm != "arl")
      throw ConfigError("algorithm: expected zoo, poga or arl, got '" + algorithm + "'");
    if (env != "two_state" && env != "cartpole" && env != "quadratic")
      throw ConfigError("env: expected two_state, cartpole or quadratic, got '" + env + "'");
    if (env == "quadratic" && algorithm != "zoo") throw ConfigError("env: quadratic is a black box and needs algorithm=zoo");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (dimension < 1) throw ConfigError("dimension must be >= 1");
    if (!(init_scale >= 0.0)) throw ConfigError("init_scale must be >= 0");
    if (horizon && *horizon < 1) throw ConfigError("horizon must be >= 1");
    hp.validate();
    if (algorithm == "zoo" && !(hp.sigma > 0.0)) throw ConfigError("sigma must be > 0 for zoo");
  }
};

struct ConfigKey {
  const char* name;
  const char* help;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"algorithm", "zoo | poga | arl (default arl)"},
      {"env", "two_state | cartpole | quadratic (default two_state)"},
      {"beta", "selection strength, >= 0 (default 1)"},
      {"alpha", "learning rate, >= 0 (default 0.1)"},
      {"sigma", "mutation / perturbation scale, >= 0; zoo needs > 0 (default 0.05)"},
      {"pop_size", "population size, >= 2 (default 1000)"},
      {"generations", "generations per trial (default 200)"},
      {"gamma", "discount; default 0.9 for two_state, 1 for cartpole"},
      {"horizon", "episode length; default 30 for two_state, 500 for cartpole"},
      {"trials", "independent trials, >= 1 (default 5)"},
      {"seed", "master seed (default 0)"},
      {"lifted_plan", "share one sampled transition plan per generation: true | false (default false)"},
      {"out", "CSV output path (default stdout)"},
      {"window", "moving-average window used by summaries, >= 1 (default 5)"},
      {"jobs", "worker threads for agent evaluation (default 1)"},
      {"init_scale", "std of initial linear-policy weights (default 0.5)"},
      {"arl_mutation", "extension: Gaussian mutation after ancestral learning (default false)"},
      {"timing", "record wall-clock ms in the CSV; breaks byte-identical output (default false)"},
      {"checkpoint", "write the final policy of the last trial as JSON to this path"},
      {"dimension", "parameter dimension of the quadratic env (default 2)"},
  };
  return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("config key '" + key + "': not a non-negative integer: '" + value + "'");
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': integer out of range: '" + value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

}  // namespace detail

inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string value = trim(raw);
  if (key == "algorithm") cfg.algorithm = value;
  else if (key == "env") cfg.env = value;
  else if (key == "beta") cfg.hp.beta = parse_double(key, value);
  else if (key == "alpha") cfg.hp.alpha = parse_double(key, value);
  else if (key == "sigma") cfg.hp.sigma = parse_double(key, value);
  else if (key == "pop_size") cfg.hp.pop_size = parse_uint(key, value);
  else if (key == "generations") cfg.hp.generations = parse_uint(key, value);
  else if (key == "gamma") cfg.gamma = parse_double(key, value);
  else if (key == "horizon") cfg.horizon = parse_uint(key, value);
  else if (key == "trials") cfg.trials = parse_uint(key, value);
  else if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "lifted_plan") cfg.lifted_plan = parse_bool(key, value);
  else if (key == "out") cfg.out = value;
  else if (key == "window") cfg.window = parse_uint(key, value);
  else if (key == "jobs") cfg.jobs = parse_uint(key, value);
  else if (key == "init_scale") cfg.init_scale = parse_double(key, value);
  else if (key == "arl_mutation") cfg.hp.arl_mutation = parse_bool(key, value);
  else if (key == "timing") cfg.timing = parse_bool(key, value);
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "dimension") cfg.dimension = parse_uint(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// key = value per line; '#' starts a comment.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

struct CurveRecord {
  std::size_t trial = 0;
  std::size_t generation = 0;
  double best_return = 0.0;
  double mean_return = 0.0;
  double wallclock_ms = 0.0;
};

inline constexpr const char* kCsvHeader = "trial,generation,best_return,mean_return,wallclock_ms";

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<CurveRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records)
    out << r.trial << ',' << r.generation << ',' << format_double(r.best_return) << ',' << format_double(r.mean_return)
        << ',' << format_double(r.wallclock_ms) << '\n';
}

inline std::vector<CurveRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kCsvHeader)
    throw InvalidInput(std::string("curve CSV: expected header '") + kCsvHeader + "'");
  std::vector<CurveRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(detail::trim(f));
    if (fields.size() != 5) throw InvalidInput("curve CSV line " + std::to_string(lineno) + ": expected 5 fields");
    try {
      records.push_back({std::stoull(fields[0]), std::stoull(fields[1]), std::stod(fields[2]), std::stod(fields[3]),
                         std::stod(fields[4])});
    } catch (const std::exception&) {
      throw InvalidInput("curve CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return records;
}

/// Trailing moving average; the first window-1 entries average the available prefix.
inline std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window < 1) throw InvalidInput("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t n = std::min(i + 1, window);
    double mean = 0.0;
    for (std::size_t k = i + 1 - n, m = 1; k <= i; ++k, ++m) mean += (series[k] - mean) / static_cast<double>(m);
    out[i] = mean;
  }
  return out;
}

struct AggregateRow {
  std::size_t generation = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct AggregateResult {
  std::vector<AggregateRow> rows;
  std::vector<std::size_t> trials;
  std::vector<std::string> warnings;
};

/// Per-generation mean and population standard deviation of the smoothed
/// best_return across trials. An explicit trial subset may be requested.
inline AggregateResult aggregate_trials(const std::vector<CurveRecord>& records, std::size_t window = 1,
                                        const std::optional<std::vector<std::size_t>>& include = std::nullopt) {
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> by_trial;
  for (const auto& r : records) by_trial[r.trial].push_back({r.generation, r.best_return});
  if (by_trial.empty()) throw InvalidInput("aggregate_trials: no records");
  AggregateResult result;
  if (include) {
    for (std::size_t t : *include)
      if (!by_trial.count(t)) throw InvalidInput("aggregate_trials: trial " + std::to_string(t) + " not present");
    result.trials.assign(include->begin(), include->end());
    std::sort(result.trials.begin(), result.trials.end());
    result.trials.erase(std::unique(result.trials.begin(), result.trials.end()), result.trials.end());
  } else {
    for (const auto& [t, _] : by_trial) result.trials.push_back(t);
  }
  if (result.trials.empty()) throw InvalidInput("aggregate_trials: empty trial selection");

  std::vector<std::vector<double>> series;
  std::vector<std::size_t> generations;
  std::size_t shortest = static_cast<std::size_t>(-1);
  for (std::size_t t : result.trials) {
    auto rows = by_trial[t];
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> s;
    for (const auto& [g, v] : rows) s.push_back(v);
    if (rows.size() < shortest) {
      shortest = rows.size();
      generations.clear();
      for (const auto& [g, v] : rows) generations.push_back(g);
    }
    series.push_back(moving_average(s, window));
  }
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series[i].size() != shortest)
      result.warnings.push_back("trial " + std::to_string(result.trials[i]) + " has " +
                                std::to_string(series[i].size()) + " generations; truncated to " +
                                std::to_string(shortest));
  const double n = static_cast<double>(series.size());
  for (std::size_t g = 0; g < shortest; ++g) {
    double mean = 0.0;
    for (const auto& s : series) mean += s[g];
    mean /= n;
    double var = 0.0;
    for (const auto& s : series) var += (s[g] - mean) * (s[g] - mean);
    result.rows.push_back({generations[g], mean, std::sqrt(var / n)});
  }
  return result;
}

namespace detail {

struct TrialClock {
  bool enabled;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed_ms() const {
    if (!enabled) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
};

inline CurveRecord summarize(std::size_t trial, std::size_t generation, std::span<const double> returns,
                             const TrialClock& clock) {
  double best = returns.front();
  double total = 0.0;
  for (double r : returns) {
    best = std::max(best, r);
    total += r;
  }
  return {trial, generation, best, total / static_cast<double>(returns.size()), clock.elapsed_ms()};
}

template <class Policy, class Env>
Policy run_population_trial(const ExperimentConfig& cfg, const Env& env, std::vector<Policy> initial,
                            const EvalContext& ctx, std::vector<CurveRecord>& out) {
  const bool arl = cfg.algorithm == "arl";
  auto pop = make_population<typename Env::State>(std::move(initial));
  TrialClock clock{cfg.timing};
  auto step = [&](const auto& current, const auto* plan) {
    return arl ? arl_iteration(current, env, cfg.hp, ctx, plan) : poga_iteration(current, env, cfg.hp, ctx, plan);
  };
  for (std::size_t g = 0; g < cfg.hp.generations; ++g) {
    if (cfg.lifted_plan) {
      auto rng = ctx.stream(g, StreamTag::kPlan);
      const auto plan = sample_lifted_plan(env, env.horizon(), rng);
      pop = step(pop, &plan);
    } else {
      pop = step(pop, static_cast<const NoPlan*>(nullptr));
    }
    out.push_back(summarize(ctx.trial, g, pop.evaluated_returns, clock));
  }
  // Agent whose selected parent had the highest return.
  std::size_t best = 0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto& a = pop.agents[i];
    const auto& b = pop.agents[best];
    if (a.parent && b.parent && pop.evaluated_returns[*a.parent] > pop.evaluated_returns[*b.parent]) best = i;
  }
  return pop.agents[best].policy;
}

template <class Policy, class Env>
Policy run_zoo_trial(const ExperimentConfig& cfg, const Env& env, Policy master, const EvalContext& ctx,
                     std::vector<CurveRecord>& out) {
  TrialClock clock{cfg.timing};
  for (std::size_t g = 0; g < cfg.hp.generations; ++g) {
    if (cfg.lifted_plan) {
      auto rng = ctx.stream(g, StreamTag::kPlan);
      const auto plan = sample_lifted_plan(env, env.horizon(), rng);
      auto result = zoo_iteration(master, env, cfg.hp, ctx, g, &plan);
      out.push_back(summarize(ctx.trial, g, result.diagnostics.returns, clock));
      master = std::move(result.master);
    } else {
      auto result = zoo_iteration(master, env, cfg.hp, ctx, g, static_cast<const NoPlan*>(nullptr));
      out.push_back(summarize(ctx.trial, g, result.diagnostics.returns, clock));
      master = std::move(result.master);
    }
  }
  return master;
}

inline std::vector<double> gaussian_vector(std::size_t n, double scale, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

template <class Policy>
void maybe_checkpoint(const ExperimentConfig& cfg, std::size_t trial, const Policy& policy) {
  if (!cfg.checkpoint.empty() && trial + 1 == cfg.trials) save_policy(policy, cfg.checkpoint);
}

}  // namespace detail

/// Runs every trial of the configured experiment and returns one record per
/// (trial, generation). Output depends only on the config, never on jobs.
inline std::vector<CurveRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<CurveRecord> records;
  records.reserve(cfg.trials * cfg.hp.generations);
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    const EvalContext ctx{cfg.seed, trial, cfg.jobs};
    const std::size_t n = cfg.hp.pop_size;
    if (cfg.env == "two_state") {
      const auto env = two_state_env(cfg.gamma.value_or(0.9), cfg.horizon.value_or(30));
      if (cfg.algorithm == "zoo") {
        const auto p = detail::run_zoo_trial(cfg, env, LogitTableauPolicy::zeros(2, 2), ctx, records);
        detail::maybe_checkpoint(cfg, trial, p);
      } else {
        std::vector<TableauPolicy> init(n, TableauPolicy::uniform(2, 2));
        const auto p = detail::run_population_trial(cfg, env, std::move(init), ctx, records);
        detail::maybe_checkpoint(cfg, trial, p);
      }
    } else if (cfg.env == "cartpole") {
      const CartPoleEnv env(cfg.gamma.value_or(1.0), cfg.horizon.value_or(500));
      if (cfg.algorithm == "zoo") {
        auto rng = ctx.stream(0, 0, StreamTag::kInit);
        LinearSigmoidPolicy master(detail::gaussian_vector(CartPoleEnv::kStateDimension, cfg.init_scale, rng));
        const auto p = detail::run_zoo_trial(cfg, env, std::move(master), ctx, records);
        detail::maybe_checkpoint(cfg, trial, p);
      } else {
        std::vector<LinearSigmoidPolicy> init;
        init.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          auto rng = ctx.stream(0, i, StreamTag::kInit);
          init.emplace_back(detail::gaussian_vector(CartPoleEnv::kStateDimension, cfg.init_scale, rng));
        }
        const auto p = detail::run_population_trial(cfg, env, std::move(init), ctx, records);
        detail::maybe_checkpoint(cfg, trial, p);
      }
    } else {
      const QuadraticBlackBox objective(cfg.dimension);
      auto rng = ctx.stream(0, 0, StreamTag::kInit);
      auto master = detail::gaussian_vector(cfg.dimension, cfg.init_scale, rng);
      detail::TrialClock clock{cfg.timing};
      for (std::size_t g = 0; g < cfg.hp.generations; ++g) {
        auto result = zoo_iteration(master, objective, cfg.hp, ctx, g);
        records.push_back(detail::summarize(trial, g, result.diagnostics.returns, clock));
        master = std::move(result.master);
      }
    }
  }
  return records;
}

/// Final best_return of each trial, in trial order.
inline std::vector<double> final_best_returns(const std::vector<CurveRecord>& records) {
  std::map<std::size_t, std::pair<std::size_t, double>> last;
  for (const auto& r : records) {
    auto it = last.find(r.trial);
    if (it == last.end() || r.generation >= it->second.first) last[r.trial] = {r.generation, r.best_return};
  }
  std::vector<double> out;
  for (const auto& [t, v] : last) out.push_back(v.second);
  return out;
}

}  // namespace arl
