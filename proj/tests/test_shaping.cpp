#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "rlguard/config.hpp"
#include "rlguard/envs/pendulum.hpp"
#include "rlguard/shaping.hpp"

using namespace rlguard;

namespace {

ControlRequirements reqs(int k_s, int k_p) {
  return {GoalRegion::ball({0.0}, 1.0), k_s, k_p};
}

// Worst enter-late sequence: U_out through k_s, then in G forever at U_in.
long double enter_late_return(const RewardBounds& b, long double g, int k_s, long double r_c_in) {
  long double sum = 0.0L, w = 1.0L;
  for (int k = 1; k < 40000; ++k, w *= g) {
    sum += w * (k <= k_s ? b.upper_out : b.upper_in + r_c_in);
  }
  return sum;
}

// Worst exit-early sequence: in G from k = 1, out only at k = k_p, back in afterwards.
long double exit_early_return(const RewardBounds& b, long double g, int k_p, long double r_c_in,
                              long double r_c_exit) {
  long double sum = 0.0L, w = 1.0L;
  for (int k = 1; k < 40000; ++k, w *= g) {
    sum += w * (k == k_p ? b.upper_out + r_c_exit : b.upper_in + r_c_in);
  }
  return sum;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(DeriveBounds, ZeroRewardGivesZeroBounds) {
  std::vector<RewardSample> s{{0.0, true}, {0.0, false}, {0.0, true}};
  const auto b = derive_bounds(std::span<const RewardSample>(s));
  EXPECT_EQ(b.upper_out, 0.0);
  EXPECT_EQ(b.upper_in, 0.0);
  EXPECT_EQ(b.lower_out, 0.0);
  EXPECT_EQ(b.lower_in, 0.0);
}

TEST(DeriveBounds, ConstantPerRegion) {
  std::vector<RewardSample> s{{1.0, true}, {-1.0, false}};
  const auto b = derive_bounds(std::span<const RewardSample>(s));
  EXPECT_EQ(b.upper_in, 1.0);
  EXPECT_EQ(b.lower_in, 1.0);
  EXPECT_EQ(b.upper_out, -1.0);
  EXPECT_EQ(b.lower_out, -1.0);
}

TEST(DeriveBounds, RejectsEmptyAndNonFinite) {
  std::vector<RewardSample> none;
  EXPECT_THROW(derive_bounds(std::span<const RewardSample>(none)), ShapingError);
  std::vector<RewardSample> nan{{std::nan(""), true}, {0.0, false}};
  EXPECT_THROW(derive_bounds(std::span<const RewardSample>(nan)), ShapingError);
  EXPECT_THROW(derive_bounds(RewardBounds{1.0, 0.0, 2.0, 0.0}), ShapingError);
}

TEST(DeriveBounds, PendulumAnalytic) {
  const auto b = pendulum_reward_bounds(0.42);
  EXPECT_NEAR(b.upper_out, -0.1 * 0.42 * 0.42, 1e-15);
  EXPECT_NEAR(b.upper_out, -0.018, 5e-4);
  EXPECT_NEAR(b.lower_out, -16.27, 5e-3);
  EXPECT_EQ(b.upper_in, 0.0);
  EXPECT_NEAR(b.lower_in, -0.18, 5e-3);
}

TEST(SigmaBound, Examples) {
  EXPECT_EQ(sigma_lower_bound({}, 0.5, 1), 0.0);
  EXPECT_DOUBLE_EQ(sigma_lower_bound({1.0, 0.0, 0.0, 0.0}, 0.5, 7), 2.0);
  EXPECT_LT(sigma_lower_bound(pendulum_reward_bounds(0.42), 0.99, 500), 10000.0);
  EXPECT_THROW(sigma_lower_bound({}, 1.0, 1), ShapingError);
  EXPECT_THROW(sigma_lower_bound({}, 0.5, 0), ShapingError);
}

TEST(SigmaBound, AdvancedCollapsesWithoutSpread) {
  const RewardBounds b{-3.0, -3.0, -3.0, -3.0};
  EXPECT_DOUBLE_EQ(sigma_lower_bound_advanced(b, 0.5, 4, 2), -3.0 / 0.5);
  EXPECT_THROW(sigma_lower_bound_advanced(b, 0.5, 4, 5), ShapingError);
}

TEST(SigmaBound, PendulumAdvancedAdmitsNonEmptyInterval) {
  const auto b = pendulum_reward_bounds(0.42);
  const double bound = sigma_lower_bound_advanced(b, 0.99, 500, 250);
  ASSERT_TRUE(std::isfinite(bound));
  for (double margin : {1e-3, 1.0, 100.0, 1e4}) {
    const double sigma = bound + margin * std::max(1.0, std::abs(bound));
    const double lo = r_c_in_lower_kz(b, 0.99, 250, sigma);
    const double hi = r_c_in_upper(b, 0.99, 500, sigma);
    EXPECT_LT(lo, hi) << "sigma " << sigma;
  }
}

TEST(Shape, PendulumConstants) {
  IntervalRule rule;
  rule.sigma = 10000.0;
  const auto b = pendulum_reward_bounds(0.42);
  const auto r = shape(b, reqs(500, 1000), 0.99, rule);
  EXPECT_EQ(r.params.sigma, 10000.0);
  EXPECT_LT(rel(r.params.r_c_in, 1.52e4), 0.02);
  EXPECT_LT(rel(r.params.r_c_exit, -3.50e10), 0.02);
  // Frozen from the brute-force boundary sums below.
  EXPECT_NEAR(r.params.r_c_in, 15222.248265619681, 1e-6);
  EXPECT_LT(rel(r.params.r_c_exit, -34678217816.855202), 1e-9);
  EXPECT_TRUE(r.certificate.all_ok());

  const long double late = enter_late_return(b, 0.99L, 500, r.params.r_c_in);
  EXPECT_NEAR(static_cast<double>(late), 10000.0, 1e-6);
  const long double early =
      exit_early_return(b, 0.99L, 1000, r.params.r_c_in, r.params.r_c_exit);
  EXPECT_NEAR(static_cast<double>(early), 10000.0, 1e-4);
}

TEST(Shape, LunarBoundsConstants) {
  IntervalRule rule;
  rule.sigma = 12000.0;
  const RewardBounds b{100.0, 100.0, -100.0, 100.0};
  const auto r = shape(b, reqs(500, 1000), 0.99, rule);
  EXPECT_LT(rel(r.params.r_c_in, 3.04e3), 0.02);
  EXPECT_LT(rel(r.params.r_c_exit, -6.93e9), 0.02);
  EXPECT_NEAR(static_cast<double>(enter_late_return(b, 0.99L, 500, r.params.r_c_in)), 12000.0,
              1e-6);
  EXPECT_NEAR(static_cast<double>(
                  exit_early_return(b, 0.99L, 1000, r.params.r_c_in, r.params.r_c_exit)),
              12000.0, 1e-4);
  EXPECT_TRUE(r.certificate.all_ok());
}

TEST(Shape, ZeroBoundsByHand) {
  IntervalRule rule;
  rule.sigma = 1.0;
  const auto r = shape({}, reqs(1, 1), 0.5, rule);
  EXPECT_DOUBLE_EQ(r.params.r_c_in, 1.0);
  EXPECT_DOUBLE_EQ(r.params.r_c_exit, 0.0);
  EXPECT_TRUE(r.certificate.all_ok());
  EXPECT_TRUE(check_assumptions({}, 1, 1, r.params).all_ok());
}

TEST(Shape, AdvancedZeroBoundsInterval) {
  IntervalRule rule;
  rule.sigma = 1.0;
  const auto r = shape_advanced({}, reqs(2, 2), 0.5, 2, rule);
  EXPECT_DOUBLE_EQ(r.r_c_in_interval.lo, 1.0);
  EXPECT_DOUBLE_EQ(r.r_c_in_interval.hi, 2.0);
  EXPECT_TRUE(r.r_c_in_interval.lo_open);
  EXPECT_FALSE(r.r_c_in_interval.hi_open);
  EXPECT_DOUBLE_EQ(r.params.r_c_in, 2.0);
  ASSERT_TRUE(r.certificate.k_z.has_value());
  EXPECT_TRUE(r.certificate.k_z->ok);
}

TEST(Shape, AdvancedKzOneReducesToPlainLower) {
  const RewardBounds b{-1.0, 0.0, -4.0, -2.0};
  EXPECT_DOUBLE_EQ(r_c_in_lower_kz(b, 0.9, 1, 5.0), r_c_in_lower(b, 0.9, 5.0));
}

TEST(Shape, SigmaBelowBoundIsRejected) {
  IntervalRule rule;
  rule.sigma = -1e6;
  EXPECT_THROW(shape(pendulum_reward_bounds(0.42), reqs(500, 1000), 0.99, rule), ShapingError);
}

TEST(Shape, TrackingZeroMatchesRegulation) {
  IntervalRule rule;
  rule.sigma = 1.0;
  const auto t = shape_tracking(0.0, 0.0, reqs(1, 1), 0.5, rule);
  const auto r = shape({}, reqs(1, 1), 0.5, rule);
  EXPECT_EQ(t.params.r_c_in, r.params.r_c_in);
  EXPECT_EQ(t.params.r_c_exit, r.params.r_c_exit);
}

TEST(Shape, TrackingPendulumPasses) {
  const double l = pendulum_reward_bounds(0.42).lower_out;
  const auto r = shape_tracking(0.0, l, reqs(500, 1000), 0.99);
  EXPECT_TRUE(r.certificate.all_ok());
  EXPECT_TRUE(check_assumptions(RewardBounds{0.0, 0.0, l, l}, 500, 1000, r.params).all_ok());
}

TEST(CheckAssumptions, PendulumPublishedParams) {
  const ShapingParams p{0.99, 10000.0, 1.52e4, -3.50e10};
  const auto c = check_assumptions(pendulum_reward_bounds(0.42), 500, 1000, p);
  EXPECT_TRUE(c.reward_structure.ok);
  EXPECT_TRUE(c.sigma.ok);
  EXPECT_TRUE(c.c_in_upper.ok);
  EXPECT_TRUE(c.c_exit.ok);
  EXPECT_TRUE(c.existence.ok);
  EXPECT_TRUE(c.all_ok());
}

TEST(CheckAssumptions, RewardStructureViolation) {
  const RewardBounds b{-1.0, 0.0, -3.0, -2.0};
  ShapingParams p{0.9, 100.0, b.upper_out - b.lower_in - 1.0, -100.0};
  EXPECT_FALSE(check_assumptions(b, 5, 5, p).reward_structure.ok);
}

TEST(CheckAssumptions, SigmaBoundaryIsNonStrict) {
  const RewardBounds b{-2.0, 0.0, -3.0, -1.0};
  const ShapingParams p{0.5, -2.0 / 0.5, 1.0, -1.0};
  const auto c = check_assumptions(b, 3, 3, p);
  EXPECT_TRUE(c.sigma.ok);
  EXPECT_EQ(c.sigma.slack, 0.0);
}

TEST(CheckAssumptions, InvalidInputsGiveFalseNotThrow) {
  const ShapingParams p{1.5, 1.0, 1.0, 1.0};
  ShapingCertificate c;
  EXPECT_NO_THROW(c = check_assumptions({}, 1, 1, p));
  EXPECT_FALSE(c.all_ok());
}

TEST(ShapeProperties, RandomDrawsRoundTripThroughCheck) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mag(-1e3, 1e3), unit(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const double uo = mag(rng), ui = mag(rng);
    const RewardBounds b{uo, ui, uo - 1e3 * unit(rng), ui - 1e3 * unit(rng)};
    const int k_s = 1 + static_cast<int>(unit(rng) * 999);
    const int k_p = 1 + static_cast<int>(unit(rng) * 999);
    const double g_min = std::max(0.05, std::pow(1e-8, 1.0 / std::max(k_s, k_p)));
    const double gamma = g_min + (0.999 - g_min) * unit(rng);
    const int k_z = 1 + static_cast<int>(unit(rng) * (k_s - 1));

    const auto plain = shape(b, reqs(k_s, k_p), gamma);
    EXPECT_TRUE(check_assumptions(b, k_s, k_p, plain.params).all_ok()) << "draw " << i;
    EXPECT_FALSE(plain.r_c_in_interval.empty());

    const auto adv = shape_advanced(b, reqs(k_s, k_p), gamma, k_z);
    const auto c = check_assumptions(b, k_s, k_p, adv.params, k_z);
    EXPECT_TRUE(c.all_ok()) << "draw " << i;
    EXPECT_TRUE(c.existence.ok);
    EXPECT_GE(sigma_lower_bound_advanced(b, gamma, k_s, k_z), sigma_lower_bound(b, gamma, k_s));

    const double gu = std::max(b.upper_out, b.upper_in) + 10.0 * unit(rng);
    const double gl = std::min(b.lower_out, b.lower_in) - 10.0 * unit(rng);
    IntervalRule rule;
    const RewardBounds loose{gu, gu, gl, gl};
    rule.sigma = sigma_lower_bound(loose, gamma, k_s) + 1.0 + std::abs(sigma_lower_bound(loose, gamma, k_s)) * 1e-3;
    const auto t = shape_tracking(gu, gl, reqs(k_s, k_p), gamma, rule);
    const auto r = shape(b, reqs(k_s, k_p), gamma, rule);
    EXPECT_GE(t.r_c_in_interval.lo, r.r_c_in_interval.lo);
    EXPECT_LE(t.r_c_in_interval.hi, r.r_c_in_interval.hi);
  }
}

TEST(ShapeProperties, RandomizedRuleStaysAdmissible) {
  const auto b = pendulum_reward_bounds(0.42);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    IntervalRule rule;
    rule.random_seed = seed;
    const auto r = shape(b, reqs(500, 1000), 0.99, rule);
    EXPECT_TRUE(r.r_c_in_interval.contains(r.params.r_c_in));
    EXPECT_TRUE(check_assumptions(b, 500, 1000, r.params).all_ok());
  }
}

TEST(ShapeProperties, Pure) {
  IntervalRule rule;
  rule.sigma = 10000.0;
  const auto a = shape(pendulum_reward_bounds(0.42), reqs(500, 1000), 0.99, rule);
  const auto b = shape(pendulum_reward_bounds(0.42), reqs(500, 1000), 0.99, rule);
  EXPECT_EQ(std::memcmp(&a.params, &b.params, sizeof(ShapingParams)), 0);
  EXPECT_EQ(a.sigma_bound, b.sigma_bound);
}

TEST(Feasibility, Examples) {
  const auto goal = GoalRegion::from_predicate([](StateView x) { return x[0] <= 0.0; }, {0.0},
                                               [](StateView x) { return std::max(0.0, x[0]); });
  const State x0{10.0};
  EXPECT_EQ(feasibility_min_settling(x0, goal, 3.0), 4);
  EXPECT_TRUE(settling_time_infeasible(3, x0, goal, 3.0));
  EXPECT_FALSE(settling_time_infeasible(4, x0, goal, 3.0));
  EXPECT_EQ(feasibility_min_settling(State{-1.0}, goal, 3.0), 0);
  EXPECT_THROW(feasibility_min_settling(x0, goal, 0.0), ShapingError);
}

TEST(ShapingRecordConfig, RoundTrip) {
  IntervalRule rule;
  rule.sigma = 10000.0;
  ShapingRecord rec;
  rec.bounds = pendulum_reward_bounds(0.42);
  rec.settling_time = 500;
  rec.permanence_time = 1000;
  rec.k_z = 250;
  rec.params = shape_advanced(rec.bounds, reqs(500, 1000), 0.99, 250, rule).params;

  std::ostringstream text;
  to_config(rec).write(text);
  const auto back = shaping_record_from_config(KeyValueConfig::parse(text.str()));
  EXPECT_EQ(back.params.r_c_in, rec.params.r_c_in);
  EXPECT_EQ(back.params.r_c_exit, rec.params.r_c_exit);
  EXPECT_EQ(back.params.sigma, rec.params.sigma);
  EXPECT_EQ(back.params.gamma, rec.params.gamma);
  EXPECT_EQ(back.bounds.lower_out, rec.bounds.lower_out);
  EXPECT_EQ(back.k_z, rec.k_z);
  EXPECT_EQ(back.settling_time, 500);
}

TEST(KeyValueConfigParse, CommentsAndErrors) {
  const auto c = KeyValueConfig::parse("# header\n\nalpha = 0.5  # trailing\nname = x\n");
  EXPECT_EQ(c.get_double("alpha"), 0.5);
  EXPECT_EQ(c.get_string("name"), "x");
  EXPECT_THROW(KeyValueConfig::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("no equals sign\n"), ConfigError);
  EXPECT_THROW(c.get_int("alpha"), ConfigError);
  EXPECT_THROW(c.reject_unknown({"alpha"}), ConfigError);
}
