#pragma once

#include <vector>

#include "rlguard/envs/environment.hpp"

namespace rlguard {

struct PendulumPhysics {
  double g = 10.0;
  double m = 1.0;
  double l = 1.0;
  double dt = 0.05;
  double max_speed = 8.0;
  double max_torque = 2.0;
};

/// angle in [-pi, pi] with 0 upright; angular velocity in [-max_speed, max_speed].
struct PendulumState {
  double angle = 0.0;
  double velocity = 0.0;

  bool operator==(const PendulumState&) const = default;
};

/// Maps into [-pi, pi]; values already inside are returned unchanged.
double wrap_angle(double angle);

/// Explicit Euler, velocity first. Torque is clipped to the physical limit.
/// Throws std::invalid_argument on non-finite input.
PendulumState pendulum_step(const PendulumState& s, double torque,
                            const PendulumPhysics& physics = {});

/// Sorted set of representative values along one axis.
class Grid {
 public:
  explicit Grid(std::vector<double> values);

  /// Mirrored piecewise grid. `edges` runs from the outer negative limit up to 0,
  /// `counts[i]` values are placed on (edges[i], edges[i+1]] (closed at the outer
  /// edge for i = 0). The positive half mirrors each piece with 0 left out.
  static Grid piecewise(const std::vector<double>& edges, const std::vector<int>& counts);

  int size() const { return static_cast<int>(values_.size()); }
  double value(int i) const { return values_.at(static_cast<std::size_t>(i)); }
  const std::vector<double>& values() const { return values_; }
  /// Nearest representative; ties go to the lower index. Saturates outside the range.
  int encode(double x) const;

 private:
  std::vector<double> values_;
};

struct PendulumDiscretizer {
  Grid angle;
  Grid velocity;
  Grid action;

  /// 40 angles, 38 velocities, 26 torques.
  static PendulumDiscretizer standard();

  int num_states() const { return angle.size() * velocity.size(); }
  int encode(const PendulumState& s) const;
  PendulumState decode(int index) const;
};

double pendulum_base_reward(const PendulumState& next, double torque);

/// Analytic region-wise bounds of the base reward for G = {|x| < theta}.
RewardBounds pendulum_reward_bounds(double theta, const PendulumPhysics& physics = {});

GoalRegion pendulum_goal(double theta);

/// H = max |f(x, u) - x| over the grid (angle difference wrapped).
double pendulum_step_bound(const PendulumDiscretizer& disc, const PendulumPhysics& physics = {});

struct PendulumOptions {
  double theta = 0.42;
  PendulumPhysics physics;
  /// Advance dynamics from decoded representatives instead of the continuous state.
  bool quantized_dynamics = false;
};

class PendulumEnv final : public DiscreteEnvironment {
 public:
  PendulumEnv(PendulumOptions options, ShapingParams params);

  int reset() override;
  StepResult step(int action) override;

  int num_states() const override { return disc_.num_states(); }
  int num_actions() const override { return disc_.action.size(); }
  int state_index() const override { return disc_.encode(state_); }
  State observation() const override { return {state_.angle, state_.velocity}; }
  bool in_goal() const override { return in_goal_; }
  const ShapingParams& shaping() const override { return params_; }
  double reward_magnitude_bound() const override;

  const PendulumState& state() const { return state_; }
  const PendulumDiscretizer& discretizer() const { return disc_; }
  const PendulumOptions& options() const { return options_; }
  bool contains(const PendulumState& s) const;

 private:
  PendulumOptions options_;
  ShapingParams params_;
  PendulumDiscretizer disc_;
  PendulumState state_;
  bool in_goal_ = false;
};

}  // namespace rlguard
