#pragma once

#include "rlguard/goal.hpp"
#include "rlguard/shaping.hpp"

namespace rlguard {

struct StepResult {
  int next_state = 0;
  double reward = 0.0;       // base + correction
  double base_reward = 0.0;
  bool in_goal = false;
};

/// Deterministic environment with a finite state index and a finite action set.
/// Handles are single-owner and mutable; use one per training session.
class DiscreteEnvironment {
 public:
  virtual ~DiscreteEnvironment() = default;

  /// Returns the state index of x_0.
  virtual int reset() = 0;
  /// Throws std::out_of_range on an invalid action index.
  virtual StepResult step(int action) = 0;

  virtual int num_states() const = 0;
  virtual int num_actions() const = 0;
  virtual int state_index() const = 0;
  /// Current underlying state (continuous for the pendulum).
  virtual State observation() const = 0;
  virtual bool in_goal() const = 0;

  virtual const ShapingParams& shaping() const = 0;
  /// Bound on |r| for every step the environment can emit.
  virtual double reward_magnitude_bound() const = 0;
};

}  // namespace rlguard
