#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rlguard/config.hpp"
#include "rlguard/envs/finite_mdp.hpp"
#include "rlguard/envs/pendulum.hpp"
#include "rlguard/learn.hpp"
#include "rlguard/shaping.hpp"

namespace rlguard {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Everything one experiment needs. `env` is one of pendulum, bounds, chain.
struct ExperimentConfig {
  std::string env = "pendulum";
  double theta = 0.42;
  int settling_time = 500;
  int permanence_time = 1000;
  std::optional<int> k_z;
  double gamma = 0.99;
  std::optional<double> sigma;
  std::optional<double> r_c_in;
  std::optional<double> r_c_exit;
  RewardBounds bounds;  // env = bounds
  int chain_states = 2;
  int chain_goal = 1;   // first goal state; states >= chain_goal are in G
  TrainConfig train;
  std::string out = "out";

  /// Defaults for the given environment (pendulum: sigma = 10000, certify_every = 10).
  static ExperimentConfig defaults(const std::string& env);
  /// Throws ConfigError on unknown keys or bad values.
  static ExperimentConfig from_config(const KeyValueConfig& config);
  KeyValueConfig to_config() const;

  ControlRequirements requirements() const;
  RewardBounds reward_bounds() const;
  FiniteMDP chain() const;
};

ShapingResult shape_experiment(const ExperimentConfig& config);
EnvFactory environment_factory(const ExperimentConfig& config, const ShapingParams& params);

/// Full command line (argv[0] included). Output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rlguard
