#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "arl/harness.hpp"
#include "arl/policy_io.hpp"
#include "arl/verify.hpp"

using namespace arl;

namespace {

ExperimentConfig small_config(const std::string& algo, const std::string& env) {
  ExperimentConfig cfg;
  cfg.algorithm = algo;
  cfg.env = env;
  cfg.trials = 2;
  cfg.hp.generations = 3;
  cfg.hp.pop_size = 16;
  if (env == "cartpole") cfg.horizon = 60;
  return cfg;
}

std::string csv_of(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_csv(os, run_experiment(cfg));
  return os.str();
}

std::vector<CurveRecord> constant_trial(std::size_t trial, double value, std::size_t gens) {
  std::vector<CurveRecord> out;
  for (std::size_t g = 0; g < gens; ++g) out.push_back({trial, g, value, value, 0.0});
  return out;
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndWhitespace) {
  std::istringstream in(
      "# tableau run\n"
      "algorithm = poga\n"
      "  env=cartpole   # trailing comment\n"
      "beta = 0.25\n"
      "pop_size = 300\n"
      "lifted_plan = true\n"
      "\n"
      "horizon = 200\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.algorithm, "poga");
  EXPECT_EQ(cfg.env, "cartpole");
  EXPECT_EQ(cfg.hp.beta, 0.25);
  EXPECT_EQ(cfg.hp.pop_size, 300u);
  EXPECT_TRUE(cfg.lifted_plan);
  EXPECT_EQ(cfg.horizon, 200u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, UnknownKeyNamesTheKey) {
  std::istringstream in("algorithm = arl\nlearning_rate = 0.1\n");
  try {
    parse_config(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(Config, BadValuesRejected) {
  ExperimentConfig cfg;
  EXPECT_THROW(set_config_value(cfg, "beta", "abc"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "pop_size", "-3"), ConfigError);
  EXPECT_THROW(set_config_value(cfg, "lifted_plan", "maybe"), ConfigError);
  std::istringstream no_eq("beta 1\n");
  EXPECT_THROW(parse_config(no_eq), ConfigError);
  cfg = ExperimentConfig{};
  cfg.trials = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.algorithm = "sgd";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.env = "quadratic";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.hp.pop_size = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.algorithm = "zoo";
  cfg.hp.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"two_state.cfg", "cartpole.cfg"}) {
    const auto cfg = load_config(std::string(ARL_SOURCE_DIR) + "/configs/" + name);
    EXPECT_NO_THROW(cfg.validate());
  }
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(RunExperiment, SingleGenerationSingleRow) {
  for (const char* algo : {"zoo", "poga", "arl"})
    for (const char* env : {"two_state", "cartpole"}) {
      auto cfg = small_config(algo, env);
      cfg.trials = 1;
      cfg.hp.generations = 1;
      const std::string csv = csv_of(cfg);
      EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2) << algo << " " << env;
      EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
    }
  auto cfg = small_config("zoo", "quadratic");
  cfg.trials = 1;
  cfg.hp.generations = 1;
  EXPECT_EQ(run_experiment(cfg).size(), 1u);
}

TEST(RunExperiment, RecordInvariants) {
  for (const char* algo : {"zoo", "poga", "arl"}) {
    const auto records = run_experiment(small_config(algo, "two_state"));
    ASSERT_EQ(records.size(), 6u);
    for (std::size_t i = 0; i < records.size(); ++i) {
      EXPECT_EQ(records[i].trial, i / 3);
      EXPECT_EQ(records[i].generation, i % 3);
      EXPECT_GE(records[i].best_return, records[i].mean_return);
      EXPECT_EQ(records[i].wallclock_ms, 0.0);
    }
  }
}

TEST(RunExperiment, ByteIdenticalReruns) {
  for (const char* algo : {"zoo", "poga", "arl"})
    for (const char* env : {"two_state", "cartpole"}) {
      const auto cfg = small_config(algo, env);
      EXPECT_EQ(csv_of(cfg), csv_of(cfg)) << algo << " " << env;
    }
}

TEST(RunExperiment, JobsInvariant) {
  for (const char* algo : {"zoo", "poga", "arl"})
    for (const char* env : {"two_state", "cartpole"}) {
      auto cfg = small_config(algo, env);
      const std::string one = csv_of(cfg);
      cfg.jobs = 4;
      EXPECT_EQ(csv_of(cfg), one) << algo << " " << env;
    }
  auto cfg = small_config("arl", "two_state");
  cfg.lifted_plan = true;
  const std::string one = csv_of(cfg);
  cfg.jobs = 3;
  EXPECT_EQ(csv_of(cfg), one);
}

TEST(RunExperiment, SeedsChangeOutput) {
  auto cfg = small_config("poga", "cartpole");
  const std::string a = csv_of(cfg);
  cfg.seed = 1;
  EXPECT_NE(csv_of(cfg), a);
}

TEST(RunExperiment, CheckpointRoundTrips) {
  const auto path = std::filesystem::temp_directory_path() / "arl_checkpoint_test.json";
  std::filesystem::remove(path);
  auto cfg = small_config("arl", "cartpole");
  cfg.checkpoint = path.string();
  run_experiment(cfg);
  ASSERT_TRUE(std::filesystem::exists(path));
  const auto policy = std::get<LinearSigmoidPolicy>(load_policy(path.string()));
  EXPECT_EQ(policy.dimension(), 4u);
  std::filesystem::remove(path);
}

TEST(Csv, RoundTripIsExact) {
  const std::vector<CurveRecord> records = {
      {0, 0, 9.5760884055000007, 4.123456789012345, 0.0},
      {0, 1, 0.1 + 0.2, -1e-300, 12.5},
      {3, 7, 500.0, 123.45678901234567, 1e10},
  };
  std::stringstream ss;
  write_csv(ss, records);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].trial, records[i].trial);
    EXPECT_EQ(back[i].generation, records[i].generation);
    EXPECT_EQ(back[i].best_return, records[i].best_return);
    EXPECT_EQ(back[i].mean_return, records[i].mean_return);
    EXPECT_EQ(back[i].wallclock_ms, records[i].wallclock_ms);
  }
  std::istringstream bad("trial,gen\n");
  EXPECT_THROW(read_csv(bad), InvalidInput);
}

TEST(MovingAverage, Examples) {
  const std::vector<double> s = {1, 2, 3, 4};
  EXPECT_EQ(moving_average(s, 1), s);
  EXPECT_EQ(moving_average(s, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  const std::vector<double> c(20, 9.5760884055);
  for (std::size_t w : {1, 3, 5, 10, 50}) EXPECT_EQ(moving_average(c, w), c);
  EXPECT_TRUE(moving_average(std::vector<double>{}, 3).empty());
  EXPECT_THROW(moving_average(s, 0), InvalidInput);
}

TEST(Aggregate, SingleTrialHasZeroStd) {
  std::vector<CurveRecord> r;
  for (std::size_t g = 0; g < 4; ++g) r.push_back({0, g, static_cast<double>(g + 1), 0.0, 0.0});
  const auto agg = aggregate_trials(r);
  ASSERT_EQ(agg.rows.size(), 4u);
  for (std::size_t g = 0; g < 4; ++g) {
    EXPECT_EQ(agg.rows[g].mean, g + 1.0);
    EXPECT_EQ(agg.rows[g].stddev, 0.0);
  }
}

TEST(Aggregate, TwoConstantTrials) {
  auto r = constant_trial(0, 3.0, 5);
  const auto b = constant_trial(1, 5.0, 5);
  r.insert(r.end(), b.begin(), b.end());
  const auto agg = aggregate_trials(r, 3);
  for (const auto& row : agg.rows) {
    EXPECT_EQ(row.mean, 4.0);
    EXPECT_EQ(row.stddev, 1.0);
  }
  EXPECT_TRUE(agg.warnings.empty());
}

TEST(Aggregate, RaggedTrialsTruncateWithWarning) {
  auto r = constant_trial(0, 1.0, 6);
  const auto b = constant_trial(1, 2.0, 4);
  r.insert(r.end(), b.begin(), b.end());
  const auto agg = aggregate_trials(r);
  EXPECT_EQ(agg.rows.size(), 4u);
  ASSERT_EQ(agg.warnings.size(), 1u);
  EXPECT_NE(agg.warnings[0].find("trial 0"), std::string::npos);
}

TEST(Aggregate, ExplicitTrialSubset) {
  std::vector<CurveRecord> r;
  for (std::size_t t = 0; t < 5; ++t) {
    const auto c = constant_trial(t, t == 4 ? 100.0 : 2.0, 3);
    r.insert(r.end(), c.begin(), c.end());
  }
  EXPECT_GT(aggregate_trials(r).rows[0].mean, 2.0);
  const auto agg = aggregate_trials(r, 1, std::vector<std::size_t>{0, 1, 2, 3});
  EXPECT_EQ(agg.trials, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(agg.rows[0].mean, 2.0);
  EXPECT_THROW(aggregate_trials(r, 1, std::vector<std::size_t>{7}), InvalidInput);
  EXPECT_THROW(aggregate_trials({}), InvalidInput);
}

TEST(Aggregate, ArlTwoStateIsMostlyMonotone) {
  auto cfg = load_config(std::string(ARL_SOURCE_DIR) + "/configs/two_state.cfg");
  cfg.algorithm = "arl";
  const auto agg = aggregate_trials(run_experiment(cfg), cfg.window);
  std::size_t ok = 0;
  for (std::size_t g = 1; g < agg.rows.size(); ++g) ok += agg.rows[g].mean >= agg.rows[g - 1].mean;
  EXPECT_GE(static_cast<double>(ok), 0.95 * static_cast<double>(agg.rows.size() - 1));
}

TEST(Verify, FastSuitesPass) {
  for (const char* suite : {"theorem2", "natgrad", "lemma1"}) {
    const auto results = verify::run_suite(suite);
    ASSERT_FALSE(results.empty());
    for (const auto& r : results) EXPECT_TRUE(r.pass) << r.check << " residual " << r.residual;
  }
  EXPECT_THROW(verify::run_suite("nope"), InvalidInput);
}
