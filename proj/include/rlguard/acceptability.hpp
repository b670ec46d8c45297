#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rlguard/goal.hpp"
#include "rlguard/shaping.hpp"

namespace rlguard {

/// Raised when a truncated sequence does not carry enough steps to decide a property.
class UndecidableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// x_k together with the action taken from it and the base reward received on
/// entering it. The base reward of x_0 is never used: rewards start at k = 1.
struct SequenceRecord {
  State state;
  std::optional<int> action;
  double base_reward = 0.0;
  bool in_goal = false;
};

/// Remains in (or out of) G forever with a constant base reward per step.
struct ExactConstantTail {
  double base_reward = 0.0;
  bool in_goal = false;
};

/// Remains in (or out of) G forever; base reward per step somewhere in [lo, hi].
struct BoundedTail {
  double reward_lo = 0.0;
  double reward_hi = 0.0;
  bool in_goal = false;
};

/// No claim about anything after the last prefix record.
struct Truncated {};

using SequenceTail = std::variant<ExactConstantTail, BoundedTail, Truncated>;

/// Finite prefix x_0 .. x_{T-1} plus an analytic description of x_T, x_{T+1}, ...
class StateSpaceSequence {
 public:
  StateSpaceSequence(std::vector<SequenceRecord> prefix, SequenceTail tail);

  /// Builds a stateless sequence from membership flags. `base_rewards[k]` is the base
  /// reward for entering x_k (index 0 ignored); both spans have the prefix length.
  static StateSpaceSequence from_flags(const std::vector<bool>& flags,
                                       const std::vector<double>& base_rewards,
                                       SequenceTail tail);

  /// Builds a sequence from states, deriving membership flags from `goal` (time-indexed).
  static StateSpaceSequence from_states(const std::vector<State>& states,
                                        const std::vector<double>& base_rewards,
                                        const GoalRegion& goal, SequenceTail tail);

  const std::vector<SequenceRecord>& prefix() const { return prefix_; }
  const SequenceTail& tail() const { return tail_; }
  std::int64_t prefix_length() const { return static_cast<std::int64_t>(prefix_.size()); }
  bool truncated() const { return std::holds_alternative<Truncated>(tail_); }

  /// Membership of x_k; nullopt beyond the prefix of a truncated sequence.
  std::optional<bool> membership(std::int64_t k) const;

 private:
  std::vector<SequenceRecord> prefix_;
  SequenceTail tail_;
};

/// Discounted return, exact or as a guaranteed enclosing interval.
struct ReturnValue {
  double lo = 0.0;
  double hi = 0.0;
  bool exact = true;

  static ReturnValue exact_value(double v) { return {v, v, true}; }
  static ReturnValue interval(double lo, double hi);
  double value() const;  // throws std::logic_error unless exact
};

/// k_exit: smallest k >= 1 with x_{k-1} in G and x_k not in G.
struct FirstExit {
  std::optional<std::int64_t> instant;  // nullopt = infinity
  bool beyond_horizon_unknown = false;  // truncated: no exit seen in the prefix only

  bool infinite() const { return !instant.has_value(); }
};

enum class FailureCase { NeverReaches, EntersLate, ExitsEarly };

struct AcceptabilityVerdict {
  bool acceptable = false;
  std::optional<std::int64_t> entered_at;
  FirstExit first_exit;
  std::optional<FailureCase> failure;
};

enum class HighReturn { yes, no, indeterminate };

struct HighReturnResult {
  HighReturn status = HighReturn::indeterminate;
  ReturnValue value;
};

struct Classification {
  HighReturn high_return = HighReturn::indeterminate;
  ReturnValue value;
  AcceptabilityVerdict acceptability;
  /// False only for a high-return but unacceptable sequence.
  bool proposition_consistent = true;
};

FirstExit first_exit_instant(const StateSpaceSequence& seq);

/// Throws UndecidableError when a truncated prefix is too short to settle both conditions.
AcceptabilityVerdict is_acceptable(const StateSpaceSequence& seq,
                                   const ControlRequirements& req);
AcceptabilityVerdict is_acceptable(const StateSpaceSequence& seq, int settling_time,
                                   int permanence_time);

/// Correction paid for the transition into x_k given memberships of x_{k-1} and x_k.
double correction_reward(bool prev_in_goal, bool in_goal, const ShapingParams& params);

/// J = sum_{k>=1} gamma^{k-1} r_k. Truncated sequences need `reward_magnitude_bound`
/// (a bound on |r_k| beyond the prefix) and yield an interval.
ReturnValue discounted_return(const StateSpaceSequence& seq, const ShapingParams& params,
                              bool correction_enabled,
                              std::optional<double> reward_magnitude_bound = std::nullopt);

HighReturnResult is_high_return(const StateSpaceSequence& seq, const ShapingParams& params,
                                std::optional<double> reward_magnitude_bound = std::nullopt);

Classification classify(const StateSpaceSequence& seq, const ShapingParams& params,
                        const ControlRequirements& req,
                        std::optional<double> reward_magnitude_bound = std::nullopt);

/// Bound on |r_k| for any step of any sequence, given region-wise base bounds.
double reward_magnitude_bound(const RewardBounds& bounds, const ShapingParams& params);

const char* to_string(FailureCase f);
const char* to_string(HighReturn h);

// Line-oriented text format:
//   #sequence v1 dim=<d> tail=<exact|bounded|truncated> [reward=..|lo=.. hi=..] [in_goal=0|1]
//   k,state_1,...,state_d,in_goal,base_reward
void write_sequence(std::ostream& out, const StateSpaceSequence& seq);
StateSpaceSequence read_sequence(std::istream& in);

/// Flat JSON object describing a verdict.
std::string verdict_to_json(const AcceptabilityVerdict& verdict);

}  // namespace rlguard
