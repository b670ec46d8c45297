#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>

#include "rlguard/goal.hpp"

namespace rlguard {

/// Thrown when shaping inputs violate a precondition (bad gamma, empty interval, ...).
class ShapingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Region-wise bounds of the base reward r^b(x', x, u), split by whether x' is in G.
struct RewardBounds {
  double upper_out = 0.0;  // U_out
  double upper_in = 0.0;   // U_in
  double lower_out = 0.0;  // L_out
  double lower_in = 0.0;   // L_in

  double delta_in() const { return upper_in - lower_in; }
  double delta_out() const { return upper_out - lower_out; }

  /// Throws ShapingError unless all four values are finite and U >= L region-wise.
  void validate() const;
};

/// Designed quantities of the shaped reward: discount, return threshold sigma and
/// the two correction terms paid on arrival in G and on leaving it.
struct ShapingParams {
  double gamma = 0.99;
  double sigma = 0.0;
  double r_c_in = 0.0;
  double r_c_exit = 0.0;
};

/// One inequality of the assumption battery. `ok` is the sign test of `slack`
/// (slack >= 0 for non-strict inequalities, slack > 0 for strict ones).
struct Inequality {
  double slack = 0.0;
  bool strict = false;
  bool ok = false;

  static Inequality non_strict(double slack) { return {slack, false, slack >= 0.0}; }
  static Inequality strict_gt(double slack) { return {slack, true, slack > 0.0}; }
};

struct ShapingCertificate {
  Inequality reward_structure;     // r_c_in >= U_out - L_in
  Inequality sigma;                // sigma >= U_out / (1 - gamma)
  Inequality c_in_upper;           // r_c_in <= settling-time cap
  Inequality c_exit;               // r_c_exit <= permanence-time cap
  Inequality existence;            // r_c_in > sigma (1 - gamma) - L_in
  Inequality existence_necessary;  // r_c_in > sigma (1 - gamma) - U_in
  std::optional<Inequality> k_z;   // r_c_in > early-entry bound, when k_z is given

  bool all_ok() const;
};

/// Interval with independently open/closed ends.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;

  bool empty() const;
  bool contains(double v) const;
};

/// How shaping picks values out of the admissible sets.
///
/// Deterministic by default: sigma = bound + margin * max(|bound|, 1) unless given,
/// r_c_in = upper endpoint of its interval, r_c_exit = its cap. With `random_seed`
/// set, each value is drawn uniformly from its admissible set instead.
struct IntervalRule {
  std::optional<double> sigma;
  double sigma_margin = 1e-3;
  std::optional<std::uint64_t> random_seed;
};

struct ShapingResult {
  ShapingParams params;
  ShapingCertificate certificate;
  double sigma_bound = 0.0;
  Interval r_c_in_interval;
  double r_c_exit_cap = 0.0;
};

/// gamma^k for k >= 0. Throws ShapingError if the result underflows to zero while
/// gamma > 0, since every caller divides by it.
double discount_power(double gamma, std::int64_t k);

// ---------------------------------------------------------------------------
// Bounds

struct RewardSample {
  double reward = 0.0;
  bool next_in_goal = false;
};

/// Tightest bounds over an exhaustive enumeration of base-reward samples.
RewardBounds derive_bounds(std::span<const RewardSample> samples);

/// Analytic mode: caller-supplied bounds, returned verbatim after validation.
RewardBounds derive_bounds(const RewardBounds& analytic);

/// Enumeration mode over explicit transitions (x', x, u).
template <typename Transition, typename RewardFn, typename InGoalFn>
RewardBounds derive_bounds(std::span<const Transition> transitions, RewardFn&& reward,
                           InGoalFn&& next_in_goal) {
  std::vector<RewardSample> samples;
  samples.reserve(transitions.size());
  for (const auto& t : transitions) samples.push_back({reward(t), next_in_goal(t)});
  return derive_bounds(std::span<const RewardSample>(samples));
}

// ---------------------------------------------------------------------------
// Closed forms

/// Strict lower bound on sigma that makes the reward-structure, settling/permanence
/// and existence assumptions simultaneously satisfiable.
double sigma_lower_bound(const RewardBounds& bounds, double gamma, int settling_time);

/// Stricter variant that also admits the early-entry (k_z) assumption.
double sigma_lower_bound_advanced(const RewardBounds& bounds, double gamma, int settling_time,
                                  int k_z);

/// Largest r_c_in such that sequences entering G after k_s cannot exceed sigma.
double r_c_in_upper(const RewardBounds& bounds, double gamma, int settling_time, double sigma);
/// Strict lower bound on r_c_in guaranteeing a high-return sequence exists.
double r_c_in_lower(const RewardBounds& bounds, double gamma, double sigma);
/// Strict lower bound on r_c_in making every sequence that enters by k_z high-return.
double r_c_in_lower_kz(const RewardBounds& bounds, double gamma, int k_z, double sigma);
/// Largest r_c_exit such that sequences exiting by k_p cannot exceed sigma.
double r_c_exit_cap(const RewardBounds& bounds, double gamma, int permanence_time, double sigma,
                    double r_c_in);

// ---------------------------------------------------------------------------
// Shaping

ShapingResult shape(const RewardBounds& bounds, const ControlRequirements& req, double gamma,
                    const IntervalRule& rule = {});

ShapingResult shape_advanced(const RewardBounds& bounds, const ControlRequirements& req,
                             double gamma, int k_z, const IntervalRule& rule = {});

/// Tracking variant: one global bound pair replaces the four region-wise bounds.
ShapingResult shape_tracking(double global_upper, double global_lower,
                             const ControlRequirements& req, double gamma,
                             const IntervalRule& rule = {});

/// Literal evaluation of every inequality. Never throws; invalid inputs give false verdicts.
ShapingCertificate check_assumptions(const RewardBounds& bounds, int settling_time,
                                     int permanence_time, const ShapingParams& params,
                                     std::optional<int> k_z = std::nullopt);
ShapingCertificate check_assumptions(const RewardBounds& bounds, const ControlRequirements& req,
                                     const ShapingParams& params,
                                     std::optional<int> k_z = std::nullopt);

// ---------------------------------------------------------------------------
// Settling-time feasibility

/// ceil(delta_G(x0) / H): any k_s strictly below delta_G(x0) / H admits no
/// acceptable policy. Returns 0 when x0 is already in G.
std::int64_t feasibility_min_settling(StateView x0, const GoalRegion& goal, double step_bound);

/// True when k_s < delta_G(x0) / H, i.e. no acceptable policy can exist.
bool settling_time_infeasible(int settling_time, StateView x0, const GoalRegion& goal,
                              double step_bound);

/// H = max |h(x, u)| over the given grid, where h(x, u) is the one-step increment.
double max_step_norm(const std::function<State(StateView, StateView)>& increment,
                     std::span<const State> states, std::span<const State> actions);

}  // namespace rlguard
