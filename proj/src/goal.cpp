#include "rlguard/goal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace rlguard {

GoalRegion::GoalRegion(TimedPredicate membership, State witness, Distance distance,
                       bool time_dependent)
    : membership_(std::move(membership)),
      witness_(std::move(witness)),
      distance_(std::move(distance)),
      time_dependent_(time_dependent) {
  if (!membership_) throw std::invalid_argument("goal region needs a membership predicate");
  if (!membership_(witness_, 0)) {
    throw std::invalid_argument("goal region witness is not a member of the region");
  }
}

GoalRegion GoalRegion::from_predicate(Predicate membership, State witness, Distance distance) {
  if (!membership) throw std::invalid_argument("goal region needs a membership predicate");
  auto timed = [m = std::move(membership)](StateView x, std::int64_t) { return m(x); };
  return GoalRegion(std::move(timed), std::move(witness), std::move(distance), false);
}

GoalRegion GoalRegion::time_varying(TimedPredicate membership, State witness) {
  return GoalRegion(std::move(membership), std::move(witness), {}, true);
}

GoalRegion GoalRegion::ball(State center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("goal ball radius must be positive and finite");
  }
  auto norm_to_center = [center](StateView x) {
    if (x.size() != center.size()) throw std::invalid_argument("state dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - center[i]) * (x[i] - center[i]);
    return std::sqrt(s);
  };
  auto member = [norm_to_center, radius](StateView x, std::int64_t) {
    return norm_to_center(x) < radius;
  };
  auto distance = [norm_to_center, radius](StateView x) {
    return std::max(0.0, norm_to_center(x) - radius);
  };
  State witness = center;
  return GoalRegion(std::move(member), std::move(witness), std::move(distance), false);
}

double GoalRegion::distance(StateView x) const {
  if (!distance_) throw std::logic_error("goal region has no distance oracle");
  return distance_(x);
}

ControlRequirements::ControlRequirements(GoalRegion g, int k_s, int k_p)
    : goal(std::move(g)), settling_time(k_s), permanence_time(k_p) {
  if (k_s < 1) throw std::invalid_argument("settling time must be >= 1");
  if (k_p < 1) throw std::invalid_argument("permanence time must be >= 1");
}

}  // namespace rlguard
