#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "arl/errors.hpp"
#include "arl/policy.hpp"

// Checkpoint format:
//   {"family": "tableau" | "logit_tableau" | "linear_sigmoid",
//    "n_states": <int>, "n_actions": <int>, "params": [<double>, ...]}
// n_states/n_actions are omitted for linear_sigmoid.
namespace arl {

using AnyPolicy = std::variant<TableauPolicy, LogitTableauPolicy, LinearSigmoidPolicy>;

inline nlohmann::json to_json(const TableauPolicy& p) {
  return {{"family", "tableau"}, {"n_states", p.state_count()}, {"n_actions", p.action_count()}, {"params", p.params()}};
}

inline nlohmann::json to_json(const LogitTableauPolicy& p) {
  return {{"family", "logit_tableau"},
          {"n_states", p.state_count()},
          {"n_actions", p.action_count()},
          {"params", p.params()}};
}

inline nlohmann::json to_json(const LinearSigmoidPolicy& p) {
  return {{"family", "linear_sigmoid"}, {"params", p.params()}};
}

inline AnyPolicy policy_from_json(const nlohmann::json& j) {
  try {
    const std::string family = j.at("family").get<std::string>();
    auto params = j.at("params").get<std::vector<double>>();
    if (family == "linear_sigmoid") return LinearSigmoidPolicy(std::move(params));
    const auto n_states = j.at("n_states").get<std::size_t>();
    const auto n_actions = j.at("n_actions").get<std::size_t>();
    if (family == "tableau") return TableauPolicy(n_states, n_actions, std::move(params));
    if (family == "logit_tableau") return LogitTableauPolicy(n_states, n_actions, std::move(params));
    throw InvalidInput("policy checkpoint: unknown family '" + family + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("policy checkpoint: ") + e.what());
  }
}

template <class Policy>
void save_policy(const Policy& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << to_json(policy).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

inline AnyPolicy load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  try {
    return policy_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("policy checkpoint: ") + e.what());
  }
}

}  // namespace arl
