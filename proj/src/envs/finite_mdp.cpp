#include "rlguard/envs/finite_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rlguard/acceptability.hpp"

namespace rlguard {

void FiniteMDP::validate() const {
  if (n_states < 1 || n_states > kMaxStates) {
    throw std::invalid_argument("finite MDP: n_states must be in [1, " +
                                std::to_string(kMaxStates) + "]");
  }
  if (n_actions < 1 || n_actions > kMaxActions) {
    throw std::invalid_argument("finite MDP: n_actions must be in [1, " +
                                std::to_string(kMaxActions) + "]");
  }
  const auto cells = static_cast<std::size_t>(n_states * n_actions);
  if (transitions.size() != cells || base_reward.size() != cells ||
      goal.size() != static_cast<std::size_t>(n_states)) {
    throw std::invalid_argument("finite MDP: table sizes do not match dimensions");
  }
  for (int t : transitions) {
    if (t < 0 || t >= n_states) throw std::invalid_argument("finite MDP: transition out of range");
  }
  for (double r : base_reward) {
    if (!std::isfinite(r)) throw std::invalid_argument("finite MDP: non-finite reward");
  }
  if (initial_state < 0 || initial_state >= n_states) {
    throw std::invalid_argument("finite MDP: initial state out of range");
  }
}

int FiniteMDP::next(int s, int a) const {
  return transitions.at(static_cast<std::size_t>(s * n_actions + a));
}

double FiniteMDP::reward(int s, int a) const {
  return base_reward.at(static_cast<std::size_t>(s * n_actions + a));
}

std::vector<bool> FiniteMDP::reachable() const {
  std::vector<bool> seen(static_cast<std::size_t>(n_states), false);
  std::vector<int> stack{initial_state};
  seen[static_cast<std::size_t>(initial_state)] = true;
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (int a = 0; a < n_actions; ++a) {
      const int t = next(s, a);
      if (!seen[static_cast<std::size_t>(t)]) {
        seen[static_cast<std::size_t>(t)] = true;
        stack.push_back(t);
      }
    }
  }
  return seen;
}

FiniteMDP FiniteMDP::chain(int n, std::vector<bool> goal) {
  FiniteMDP m;
  m.n_states = n;
  m.n_actions = 2;
  m.goal = std::move(goal);
  for (int s = 0; s < n; ++s) {
    m.transitions.push_back(s);
    m.transitions.push_back(std::min(s + 1, n - 1));
  }
  m.base_reward.assign(static_cast<std::size_t>(2 * n), 0.0);
  m.validate();
  return m;
}

FiniteMDP FiniteMDP::ring(int n, std::vector<bool> goal) {
  FiniteMDP m = chain(n, std::move(goal));
  m.transitions[static_cast<std::size_t>(2 * (n - 1) + 1)] = 0;
  return m;
}

FiniteMDP FiniteMDP::identity(int n, int n_actions, std::vector<bool> goal) {
  FiniteMDP m;
  m.n_states = n;
  m.n_actions = n_actions;
  m.goal = std::move(goal);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < n_actions; ++a) m.transitions.push_back(s);
  }
  m.base_reward.assign(static_cast<std::size_t>(n * n_actions), 0.0);
  m.validate();
  return m;
}

FiniteMdpEnv::FiniteMdpEnv(FiniteMDP mdp, ShapingParams params)
    : mdp_(std::move(mdp)), params_(params) {
  mdp_.validate();
  reset();
}

int FiniteMdpEnv::reset() {
  state_ = mdp_.initial_state;
  return state_;
}

StepResult FiniteMdpEnv::step(int action) {
  if (action < 0 || action >= mdp_.n_actions) throw std::out_of_range("MDP action index");
  const bool was_in = in_goal();
  StepResult r;
  r.base_reward = mdp_.reward(state_, action);
  state_ = mdp_.next(state_, action);
  r.next_state = state_;
  r.in_goal = in_goal();
  r.reward = r.base_reward + correction_reward(was_in, r.in_goal, params_);
  return r;
}

double FiniteMdpEnv::reward_magnitude_bound() const {
  double base = 0.0;
  for (double r : mdp_.base_reward) base = std::max(base, std::abs(r));
  return base + std::max({std::abs(params_.r_c_in), std::abs(params_.r_c_exit)});
}

FiniteMdpEnv build_oracle_mdp(const FiniteMDP& mdp, const ShapingParams& params) {
  return FiniteMdpEnv(mdp, params);
}

}  // namespace rlguard
