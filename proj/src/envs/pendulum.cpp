#include "rlguard/envs/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rlguard/acceptability.hpp"

namespace rlguard {

using std::numbers::pi;

double wrap_angle(double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("wrap_angle: non-finite angle");
  if (angle >= -pi && angle <= pi) return angle;
  return std::remainder(angle, 2.0 * pi);
}

PendulumState pendulum_step(const PendulumState& s, double torque, const PendulumPhysics& p) {
  if (!std::isfinite(s.angle) || !std::isfinite(s.velocity) || !std::isfinite(torque)) {
    throw std::invalid_argument("pendulum_step: non-finite input");
  }
  const double u = std::clamp(torque, -p.max_torque, p.max_torque);
  const double accel = 3.0 * p.g / (2.0 * p.l) * std::sin(s.angle) + 3.0 / (p.m * p.l * p.l) * u;
  PendulumState next;
  next.velocity = std::clamp(s.velocity + accel * p.dt, -p.max_speed, p.max_speed);
  next.angle = wrap_angle(s.angle + next.velocity * p.dt);
  return next;
}

Grid::Grid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("grid needs at least one value");
  if (!std::is_sorted(values_.begin(), values_.end()) ||
      std::adjacent_find(values_.begin(), values_.end()) != values_.end()) {
    throw std::invalid_argument("grid values must be strictly increasing");
  }
}

Grid Grid::piecewise(const std::vector<double>& edges, const std::vector<int>& counts) {
  const std::size_t m = counts.size();
  if (m == 0 || edges.size() != m + 1 || edges.back() != 0.0) {
    throw std::invalid_argument("piecewise grid: need counts.size() + 1 edges ending at 0");
  }
  if (counts[0] < 2 || std::any_of(counts.begin(), counts.end(), [](int n) { return n < 1; })) {
    throw std::invalid_argument("piecewise grid: outer piece needs >= 2 values, others >= 1");
  }
  std::vector<double> v;
  auto linspace = [&](double a, double b, int n) {
    for (int j = 0; j < n; ++j) v.push_back(a + (b - a) * j / (n - 1));
  };
  linspace(edges[0], edges[1], counts[0]);
  for (std::size_t i = 1; i < m; ++i) {
    const double a = edges[i], b = edges[i + 1];
    for (int j = 1; j <= counts[i]; ++j) v.push_back(a + (b - a) * j / counts[i]);
  }
  for (std::size_t r = m; r-- > 0;) {
    const double lo = -edges[r + 1], hi = -edges[r];
    const int n = counts[r];
    if (r == 0) {
      linspace(lo, hi, n);
    } else if (r == m - 1) {
      for (int j = 1; j <= n; ++j) v.push_back(lo + (hi - lo) * j / (n + 1));
    } else {
      for (int j = 0; j < n; ++j) v.push_back(lo + (hi - lo) * j / n);
    }
  }
  std::sort(v.begin(), v.end());
  return Grid(std::move(v));
}

int Grid::encode(double x) const {
  if (std::isnan(x)) throw std::invalid_argument("grid encode: NaN");
  const auto it = std::lower_bound(values_.begin(), values_.end(), x);
  if (it == values_.begin()) return 0;
  if (it == values_.end()) return size() - 1;
  const int i = static_cast<int>(it - values_.begin());
  return (x - values_[i - 1] <= values_[i] - x) ? i - 1 : i;
}

PendulumDiscretizer PendulumDiscretizer::standard() {
  return {Grid::piecewise({-pi, -pi / 9.0, -pi / 36.0, 0.0}, {8, 7, 5}),
          Grid::piecewise({-8.0, -1.0, 0.0}, {10, 9}),
          Grid::piecewise({-2.0, -0.2, 0.0}, {9, 4})};
}

int PendulumDiscretizer::encode(const PendulumState& s) const {
  return angle.encode(s.angle) * velocity.size() + velocity.encode(s.velocity);
}

PendulumState PendulumDiscretizer::decode(int index) const {
  if (index < 0 || index >= num_states()) throw std::out_of_range("pendulum state index");
  return {angle.value(index / velocity.size()), velocity.value(index % velocity.size())};
}

double pendulum_base_reward(const PendulumState& next, double torque) {
  return -next.angle * next.angle - 0.1 * next.velocity * next.velocity -
         0.001 * torque * torque;
}

RewardBounds pendulum_reward_bounds(double theta, const PendulumPhysics& p) {
  if (!(theta > 0.0) || !(theta <= pi)) throw std::invalid_argument("theta must lie in (0, pi]");
  const double torque_cost = 0.001 * p.max_torque * p.max_torque;
  RewardBounds b;
  // Outside the ball the cheapest way to sit on its boundary is all velocity.
  const double r2 = theta * theta;
  b.upper_out = -0.1 * r2;
  b.lower_out = -pi * pi - 0.1 * p.max_speed * p.max_speed - torque_cost;
  b.upper_in = 0.0;
  b.lower_in = -r2 - torque_cost;
  b.validate();
  return b;
}

GoalRegion pendulum_goal(double theta) { return GoalRegion::ball({0.0, 0.0}, theta); }

double pendulum_step_bound(const PendulumDiscretizer& disc, const PendulumPhysics& physics) {
  std::vector<State> states;
  states.reserve(static_cast<std::size_t>(disc.num_states()));
  for (int i = 0; i < disc.num_states(); ++i) {
    const auto s = disc.decode(i);
    states.push_back({s.angle, s.velocity});
  }
  std::vector<State> actions;
  for (double u : disc.action.values()) actions.push_back({u});
  auto increment = [&](StateView x, StateView u) -> State {
    const auto next = pendulum_step({x[0], x[1]}, u[0], physics);
    return {std::remainder(next.angle - x[0], 2.0 * pi), next.velocity - x[1]};
  };
  return max_step_norm(increment, states, actions);
}

PendulumEnv::PendulumEnv(PendulumOptions options, ShapingParams params)
    : options_(options), params_(params), disc_(PendulumDiscretizer::standard()) {
  if (!(options_.theta > 0.0)) throw std::invalid_argument("theta must be > 0");
  reset();
}

bool PendulumEnv::contains(const PendulumState& s) const {
  return std::hypot(s.angle, s.velocity) < options_.theta;
}

int PendulumEnv::reset() {
  state_ = {pi, 0.0};
  if (options_.quantized_dynamics) state_ = disc_.decode(disc_.encode(state_));
  in_goal_ = contains(state_);
  return disc_.encode(state_);
}

StepResult PendulumEnv::step(int action) {
  if (action < 0 || action >= num_actions()) throw std::out_of_range("pendulum action index");
  const double u = disc_.action.value(action);
  PendulumState next = pendulum_step(state_, u, options_.physics);
  if (options_.quantized_dynamics) next = disc_.decode(disc_.encode(next));
  const bool next_in = contains(next);
  StepResult r;
  r.base_reward = pendulum_base_reward(next, u);
  r.reward = r.base_reward + correction_reward(in_goal_, next_in, params_);
  r.in_goal = next_in;
  state_ = next;
  in_goal_ = next_in;
  r.next_state = disc_.encode(state_);
  return r;
}

double PendulumEnv::reward_magnitude_bound() const {
  return rlguard::reward_magnitude_bound(
      pendulum_reward_bounds(options_.theta, options_.physics), params_);
}

}  // namespace rlguard
