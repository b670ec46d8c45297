#pragma once

#include <vector>

#include "rlguard/envs/environment.hpp"

namespace rlguard {

/// Small deterministic MDP with tabular transitions and base rewards.
struct FiniteMDP {
  static constexpr int kMaxStates = 12;
  static constexpr int kMaxActions = 4;

  int n_states = 0;
  int n_actions = 0;
  std::vector<int> transitions;     // [s * n_actions + a] -> s'
  std::vector<bool> goal;           // [s]
  std::vector<double> base_reward;  // [s * n_actions + a], paid on entering s'
  int initial_state = 0;

  /// Throws std::invalid_argument on malformed tables.
  void validate() const;

  int next(int s, int a) const;
  double reward(int s, int a) const;
  /// States reachable from the initial state under some action sequence.
  std::vector<bool> reachable() const;

  /// n states in a line, action 0 stays, action 1 advances (saturating).
  static FiniteMDP chain(int n, std::vector<bool> goal);
  /// n states in a cycle, action 0 stays, action 1 moves to (s + 1) mod n.
  static FiniteMDP ring(int n, std::vector<bool> goal);
  /// Every action stays put.
  static FiniteMDP identity(int n, int n_actions, std::vector<bool> goal);
};

class FiniteMdpEnv final : public DiscreteEnvironment {
 public:
  FiniteMdpEnv(FiniteMDP mdp, ShapingParams params);

  int reset() override;
  StepResult step(int action) override;

  int num_states() const override { return mdp_.n_states; }
  int num_actions() const override { return mdp_.n_actions; }
  int state_index() const override { return state_; }
  State observation() const override { return {static_cast<double>(state_)}; }
  bool in_goal() const override { return mdp_.goal[static_cast<std::size_t>(state_)]; }
  const ShapingParams& shaping() const override { return params_; }
  double reward_magnitude_bound() const override;

  const FiniteMDP& mdp() const { return mdp_; }

 private:
  FiniteMDP mdp_;
  ShapingParams params_;
  int state_ = 0;
};

FiniteMdpEnv build_oracle_mdp(const FiniteMDP& mdp, const ShapingParams& params);

}  // namespace rlguard
