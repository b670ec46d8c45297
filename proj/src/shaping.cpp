#include "rlguard/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace rlguard {
namespace {

void require_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ShapingError("gamma must lie in [0, 1), got " + std::to_string(gamma));
  }
}

void require_horizon(int k, const char* name) {
  if (k < 1) throw ShapingError(std::string(name) + " must be >= 1");
}

// Uniform draw in (0, 1].
double unit_open_closed(std::mt19937_64& rng) {
  return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double pick_sigma(double bound, const IntervalRule& rule, std::mt19937_64* rng) {
  if (rule.sigma) return *rule.sigma;
  const double scale = std::max(std::abs(bound), 1.0);
  if (rng != nullptr) return bound + unit_open_closed(*rng) * scale;
  if (!(rule.sigma_margin > 0.0)) throw ShapingError("sigma margin must be positive");
  return bound + rule.sigma_margin * scale;
}

double pick_r_c_in(const Interval& interval, std::mt19937_64* rng) {
  if (rng == nullptr) return interval.hi;
  double v = interval.lo + (interval.hi - interval.lo) * unit_open_closed(*rng);
  v = std::min(v, interval.hi);
  return v > interval.lo ? v : interval.hi;
}

double pick_r_c_exit(double cap, std::mt19937_64* rng) {
  if (rng == nullptr) return cap;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(*rng);
  return std::min(cap, cap - u * std::max(std::abs(cap), 1.0));
}

ShapingResult select(const RewardBounds& bounds, const ControlRequirements& req, double gamma,
                     double sigma_bound, std::optional<int> k_z, const IntervalRule& rule) {
  std::optional<std::mt19937_64> rng;
  if (rule.random_seed) rng.emplace(*rule.random_seed);
  std::mt19937_64* g = rng ? &*rng : nullptr;

  ShapingResult out;
  out.sigma_bound = sigma_bound;
  const double sigma = pick_sigma(sigma_bound, rule, g);
  if (!std::isfinite(sigma)) throw ShapingError("sigma must be finite");

  const double lower = k_z ? r_c_in_lower_kz(bounds, gamma, *k_z, sigma)
                           : r_c_in_lower(bounds, gamma, sigma);
  out.r_c_in_interval = {lower, r_c_in_upper(bounds, gamma, req.settling_time, sigma), true, false};
  if (out.r_c_in_interval.empty()) {
    throw ShapingError("r_c_in interval is empty: sigma is not above the compatibility bound");
  }

  ShapingParams p;
  p.gamma = gamma;
  p.sigma = sigma;
  p.r_c_in = pick_r_c_in(out.r_c_in_interval, g);
  out.r_c_exit_cap = r_c_exit_cap(bounds, gamma, req.permanence_time, sigma, p.r_c_in);
  p.r_c_exit = pick_r_c_exit(out.r_c_exit_cap, g);
  out.params = p;

  out.certificate = check_assumptions(bounds, req, p, k_z);
  if (!out.certificate.all_ok()) {
    throw ShapingError("selected shaping parameters fail the assumption check");
  }
  return out;
}

ShapingCertificate invalid_certificate(bool with_kz) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ShapingCertificate c;
  c.reward_structure = c.sigma = c.c_in_upper = c.c_exit = Inequality::non_strict(nan);
  c.existence = c.existence_necessary = Inequality::strict_gt(nan);
  if (with_kz) c.k_z = Inequality::strict_gt(nan);
  return c;
}

}  // namespace

void RewardBounds::validate() const {
  for (double v : {upper_out, upper_in, lower_out, lower_in}) {
    if (!std::isfinite(v)) throw ShapingError("reward bounds must be finite");
  }
  if (upper_out < lower_out) throw ShapingError("reward bounds: U_out < L_out");
  if (upper_in < lower_in) throw ShapingError("reward bounds: U_in < L_in");
}

bool ShapingCertificate::all_ok() const {
  return reward_structure.ok && sigma.ok && c_in_upper.ok && c_exit.ok && existence.ok &&
         existence_necessary.ok && (!k_z || k_z->ok);
}

bool Interval::empty() const {
  if (lo_open || hi_open) return !(lo < hi);
  return !(lo <= hi);
}

bool Interval::contains(double v) const {
  const bool above = lo_open ? v > lo : v >= lo;
  const bool below = hi_open ? v < hi : v <= hi;
  return above && below;
}

double discount_power(double gamma, std::int64_t k) {
  if (k < 0) throw ShapingError("negative discount exponent");
  if (k == 0) return 1.0;
  const double p = std::pow(gamma, static_cast<double>(k));
  if (!(p > 0.0)) {
    throw ShapingError("gamma^" + std::to_string(k) + " underflows to zero");
  }
  return p;
}

RewardBounds derive_bounds(std::span<const RewardSample> samples) {
  if (samples.empty()) throw ShapingError("derive_bounds: empty enumeration");
  const double inf = std::numeric_limits<double>::infinity();
  RewardBounds b{-inf, -inf, inf, inf};
  bool any_in = false;
  bool any_out = false;
  for (const auto& s : samples) {
    if (!std::isfinite(s.reward)) throw ShapingError("derive_bounds: non-finite reward value");
    if (s.next_in_goal) {
      any_in = true;
      b.upper_in = std::max(b.upper_in, s.reward);
      b.lower_in = std::min(b.lower_in, s.reward);
    } else {
      any_out = true;
      b.upper_out = std::max(b.upper_out, s.reward);
      b.lower_out = std::min(b.lower_out, s.reward);
    }
  }
  if (!any_in) throw ShapingError("derive_bounds: no sample lands inside the goal region");
  if (!any_out) throw ShapingError("derive_bounds: no sample lands outside the goal region");
  b.validate();
  return b;
}

RewardBounds derive_bounds(const RewardBounds& analytic) {
  analytic.validate();
  return analytic;
}

double sigma_lower_bound(const RewardBounds& bounds, double gamma, int settling_time) {
  require_gamma(gamma);
  require_horizon(settling_time, "settling time");
  const double gs = std::pow(gamma, settling_time);
  return bounds.upper_out / (1.0 - gamma) +
         bounds.delta_in() * gs / ((1.0 - gamma) * (1.0 - gs));
}

double sigma_lower_bound_advanced(const RewardBounds& bounds, double gamma, int settling_time,
                                  int k_z) {
  require_gamma(gamma);
  require_horizon(settling_time, "settling time");
  if (!(gamma > 0.0)) throw ShapingError("advanced sigma bound needs gamma > 0");
  if (k_z < 1 || k_z > settling_time) throw ShapingError("k_z must satisfy 1 <= k_z <= k_s");
  const double gs = discount_power(gamma, settling_time);
  const double gz = discount_power(gamma, k_z - 1);
  const double gap = gz - gs;
  if (!(gap > 0.0)) throw ShapingError("degenerate advanced bound: gamma^(k_z-1) == gamma^k_s");
  const double base = gs * bounds.delta_in() / ((1.0 - gamma) * (1.0 - gs)) +
                      bounds.upper_out / (1.0 - gamma);
  const double extra = gs * (1.0 - gz) / ((1.0 - gamma) * gap) *
                       (gs * bounds.delta_in() / (1.0 - gs) + bounds.delta_out());
  return base + extra;
}

double r_c_in_upper(const RewardBounds& bounds, double gamma, int settling_time, double sigma) {
  require_gamma(gamma);
  require_horizon(settling_time, "settling time");
  const double gs = discount_power(gamma, settling_time);
  return -bounds.upper_in - bounds.upper_out * (1.0 - gs) / gs + sigma * (1.0 - gamma) / gs;
}

double r_c_in_lower(const RewardBounds& bounds, double gamma, double sigma) {
  require_gamma(gamma);
  return sigma * (1.0 - gamma) - bounds.lower_in;
}

double r_c_in_lower_kz(const RewardBounds& bounds, double gamma, int k_z, double sigma) {
  require_gamma(gamma);
  require_horizon(k_z, "k_z");
  const double gz = discount_power(gamma, k_z - 1);
  return -bounds.lower_in - bounds.lower_out * (1.0 - gz) / gz + sigma * (1.0 - gamma) / gz;
}

double r_c_exit_cap(const RewardBounds& bounds, double gamma, int permanence_time, double sigma,
                    double r_c_in) {
  require_gamma(gamma);
  require_horizon(permanence_time, "permanence time");
  const double gp = discount_power(gamma, permanence_time - 1);
  const double held = (bounds.upper_in + r_c_in) * (1.0 + gp * (gamma - 1.0)) / (1.0 - gamma);
  return -bounds.upper_out - (held - sigma) / gp;
}

ShapingResult shape(const RewardBounds& bounds, const ControlRequirements& req, double gamma,
                    const IntervalRule& rule) {
  bounds.validate();
  const double bound = sigma_lower_bound(bounds, gamma, req.settling_time);
  return select(bounds, req, gamma, bound, std::nullopt, rule);
}

ShapingResult shape_advanced(const RewardBounds& bounds, const ControlRequirements& req,
                             double gamma, int k_z, const IntervalRule& rule) {
  bounds.validate();
  const double bound = sigma_lower_bound_advanced(bounds, gamma, req.settling_time, k_z);
  return select(bounds, req, gamma, bound, k_z, rule);
}

ShapingResult shape_tracking(double global_upper, double global_lower,
                             const ControlRequirements& req, double gamma,
                             const IntervalRule& rule) {
  if (!(global_upper >= global_lower)) throw ShapingError("tracking bounds: U < L");
  const RewardBounds b{global_upper, global_upper, global_lower, global_lower};
  return shape(b, req, gamma, rule);
}

ShapingCertificate check_assumptions(const RewardBounds& bounds, int settling_time,
                                     int permanence_time, const ShapingParams& p,
                                     std::optional<int> k_z) {
  try {
    require_gamma(p.gamma);
    ShapingCertificate c;
    const double one_minus = 1.0 - p.gamma;
    c.reward_structure =
        Inequality::non_strict(p.r_c_in - (bounds.upper_out - bounds.lower_in));
    c.sigma = Inequality::non_strict(p.sigma - bounds.upper_out / one_minus);
    c.c_in_upper =
        Inequality::non_strict(r_c_in_upper(bounds, p.gamma, settling_time, p.sigma) - p.r_c_in);
    c.c_exit = Inequality::non_strict(
        r_c_exit_cap(bounds, p.gamma, permanence_time, p.sigma, p.r_c_in) - p.r_c_exit);
    c.existence = Inequality::strict_gt(p.r_c_in - r_c_in_lower(bounds, p.gamma, p.sigma));
    c.existence_necessary =
        Inequality::strict_gt(p.r_c_in - (p.sigma * one_minus - bounds.upper_in));
    if (k_z) {
      if (*k_z > settling_time) throw ShapingError("k_z exceeds k_s");
      c.k_z = Inequality::strict_gt(p.r_c_in - r_c_in_lower_kz(bounds, p.gamma, *k_z, p.sigma));
    }
    return c;
  } catch (const ShapingError&) {
    return invalid_certificate(k_z.has_value());
  }
}

ShapingCertificate check_assumptions(const RewardBounds& bounds, const ControlRequirements& req,
                                     const ShapingParams& params, std::optional<int> k_z) {
  return check_assumptions(bounds, req.settling_time, req.permanence_time, params, k_z);
}

std::int64_t feasibility_min_settling(StateView x0, const GoalRegion& goal, double step_bound) {
  if (!(step_bound > 0.0) || !std::isfinite(step_bound)) {
    throw ShapingError("step bound H must be positive and finite");
  }
  if (goal.contains(x0, 0)) return 0;
  const double ratio = goal.distance(x0) / step_bound;
  return static_cast<std::int64_t>(std::ceil(ratio));
}

bool settling_time_infeasible(int settling_time, StateView x0, const GoalRegion& goal,
                              double step_bound) {
  if (!(step_bound > 0.0) || !std::isfinite(step_bound)) {
    throw ShapingError("step bound H must be positive and finite");
  }
  if (goal.contains(x0, 0)) return false;
  return static_cast<double>(settling_time) < goal.distance(x0) / step_bound;
}

double max_step_norm(const std::function<State(StateView, StateView)>& increment,
                     std::span<const State> states, std::span<const State> actions) {
  double h = 0.0;
  for (const auto& x : states) {
    for (const auto& u : actions) {
      const State d = increment(x, u);
      double s = 0.0;
      for (double v : d) s += v * v;
      h = std::max(h, std::sqrt(s));
    }
  }
  return h;
}

}  // namespace rlguard
