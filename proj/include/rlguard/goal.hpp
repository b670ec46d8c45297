#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rlguard {

using State = std::vector<double>;
using StateView = std::span<const double>;

/// Goal region G, optionally time-indexed (tracking problems use G_k).
///
/// Every region is built with a witness state that must be a member at time 0,
/// so a constructed region is never empty.
class GoalRegion {
 public:
  using Predicate = std::function<bool(StateView)>;
  using TimedPredicate = std::function<bool(StateView, std::int64_t)>;
  using Distance = std::function<double(StateView)>;

  static GoalRegion from_predicate(Predicate membership, State witness, Distance distance = {});
  static GoalRegion time_varying(TimedPredicate membership, State witness);
  /// Open Euclidean ball {x : |x - center| < radius}.
  static GoalRegion ball(State center, double radius);

  bool contains(StateView x, std::int64_t k = 0) const { return membership_(x, k); }
  bool time_dependent() const { return time_dependent_; }
  const State& witness() const { return witness_; }

  bool has_distance() const { return static_cast<bool>(distance_); }
  /// delta_G(x) = inf over G of |x - y|. Throws if the region has no distance oracle.
  double distance(StateView x) const;

 private:
  GoalRegion(TimedPredicate membership, State witness, Distance distance, bool time_dependent);

  TimedPredicate membership_;
  State witness_;
  Distance distance_;
  bool time_dependent_ = false;
};

/// Goal region plus desired settling time k_s and permanence time k_p (in steps).
struct ControlRequirements {
  ControlRequirements(GoalRegion goal, int settling_time, int permanence_time);

  GoalRegion goal;
  int settling_time;
  int permanence_time;
};

}  // namespace rlguard
