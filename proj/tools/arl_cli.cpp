// Command-line driver: run experiments, verify identities, aggregate curves.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "arl/arl.hpp"

namespace {

std::string config_help() {
  std::ostringstream os;
  os << "\nConfig keys (key = value, '#' comments; --set key=value overrides):\n";
  for (const auto& k : arl::config_keys()) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-13s %s\n", k.name, k.help);
    os << line;
  }
  return os.str();
}

std::vector<std::size_t> parse_trial_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw arl::InvalidInput("--include-trials: expected comma-separated trial indices, got '" + text + "'");
    out.push_back(std::stoull(item));
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets, const std::string& algo,
            const std::string& env, const std::string& seed, const std::string& jobs, const std::string& out) {
  arl::ExperimentConfig cfg = config_path.empty() ? arl::ExperimentConfig{} : arl::load_config(config_path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw arl::ConfigError("--set expects key=value, got '" + kv + "'");
    arl::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!algo.empty()) arl::set_config_value(cfg, "algorithm", algo);
  if (!env.empty()) arl::set_config_value(cfg, "env", env);
  if (!seed.empty()) arl::set_config_value(cfg, "seed", seed);
  if (!jobs.empty()) arl::set_config_value(cfg, "jobs", jobs);
  if (!out.empty()) arl::set_config_value(cfg, "out", out);

  const auto records = arl::run_experiment(cfg);
  if (cfg.out.empty() || cfg.out == "-") {
    arl::write_csv(std::cout, records);
  } else {
    std::ofstream file(cfg.out);
    if (!file) throw std::runtime_error("cannot open output file: " + cfg.out);
    arl::write_csv(file, records);
    if (!file) throw std::runtime_error("failed writing output file: " + cfg.out);
  }
  const auto finals = arl::final_best_returns(records);
  double mean = 0.0;
  for (std::size_t t = 0; t < finals.size(); ++t) {
    std::fprintf(stderr, "trial %zu: final best_return %.6g\n", t, finals[t]);
    mean += finals[t];
  }
  std::fprintf(stderr, "%s on %s: mean final best_return %.6g over %zu trial(s)\n", cfg.algorithm.c_str(),
               cfg.env.c_str(), mean / static_cast<double>(finals.size()), finals.size());
  return 0;
}

int cmd_verify(const std::string& suite, const std::string& json_path, std::uint64_t seed) {
  const auto results = arl::verify::run_suite(suite, seed);
  nlohmann::json report = nlohmann::json::array();
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%-4s %-32s residual=%.6g tolerance=%.6g\n", r.pass ? "PASS" : "FAIL", r.check.c_str(), r.residual,
                r.tolerance);
    report.push_back({{"check", r.check}, {"residual", r.residual}, {"tolerance", r.tolerance}, {"pass", r.pass}});
    ok = ok && r.pass;
  }
  if (!json_path.empty()) {
    std::ofstream file(json_path);
    if (!file) throw std::runtime_error("cannot open JSON output: " + json_path);
    file << report.dump(2) << '\n';
  }
  return ok ? 0 : 1;
}

int cmd_aggregate(const std::string& in_path, std::size_t window, const std::string& include,
                  const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot open input CSV: " + in_path);
  const auto records = arl::read_csv(in);
  std::optional<std::vector<std::size_t>> subset;
  if (!include.empty()) subset = parse_trial_list(include);
  const auto agg = arl::aggregate_trials(records, window, subset);
  for (const auto& w : agg.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot open output file: " + out_path);
    out = &file;
  }
  *out << "generation,mean_best_return,std_best_return,n_trials\n";
  for (const auto& row : agg.rows)
    *out << row.generation << ',' << arl::format_double(row.mean) << ',' << arl::format_double(row.stddev) << ','
         << agg.trials.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population-based RL: ZOO, POGA and ancestral RL, with an exact-enumeration verifier"};
  app.require_subcommand(1);

  std::string config_path, algo, env, seed, jobs, out;
  std::vector<std::string> sets;
  auto* run = app.add_subcommand("run", "Run an experiment and write learning curves as CSV");
  run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--algo", algo, "zoo | poga | arl");
  run->add_option("--env", env, "two_state | cartpole | quadratic");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--jobs", jobs, "worker threads");
  run->add_option("--out", out, "CSV output path (stdout if omitted)");
  run->add_option("--set", sets, "override any config key: key=value (repeatable)");
  run->footer(config_help());

  std::string suite = "all", json_path;
  std::uint64_t verify_seed = arl::verify::kDefaultSeed;
  auto* verify = app.add_subcommand("verify", "Check the exact identities; exit status 1 if any check fails");
  std::vector<std::string> suites = {"all"};
  for (const auto& s : arl::verify::suite_names()) suites.push_back(s);
  verify->add_option("--suite", suite, "all | theorem1 | theorem2 | lemma1 | variational | lifted | natgrad | "
                                       "zoo_unbiased | beta_limit")
      ->check(CLI::IsMember(suites));
  verify->add_option("--json", json_path, "write {check, residual, tolerance, pass} records to this file");
  verify->add_option("--seed", verify_seed, "seed for random instances");

  std::string in_path, include, agg_out;
  std::size_t window = 1;
  auto* aggregate = app.add_subcommand("aggregate", "Per-generation mean and std of smoothed best_return");
  aggregate->add_option("--in", in_path, "curve CSV produced by run")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--window", window, "trailing moving-average window")->required()->check(CLI::PositiveNumber);
  aggregate->add_option("--include-trials", include, "comma-separated subset of trials, e.g. 0,1,2,3");
  aggregate->add_option("--out", agg_out, "output path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, sets, algo, env, seed, jobs, out);
    if (verify->parsed()) return cmd_verify(suite, json_path, verify_seed);
    if (aggregate->parsed()) return cmd_aggregate(in_path, window, include, agg_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
