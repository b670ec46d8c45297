#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "rlguard/acceptability.hpp"

using namespace rlguard;

namespace {

StateSpaceSequence flags_seq(std::vector<bool> flags, bool tail_in, double tail_reward = 0.0) {
  std::vector<double> rewards(flags.size(), 0.0);
  return StateSpaceSequence::from_flags(flags, rewards, ExactConstantTail{tail_reward, tail_in});
}

StateSpaceSequence truncated(std::vector<bool> flags) {
  std::vector<double> rewards(flags.size(), 0.0);
  return StateSpaceSequence::from_flags(flags, rewards, Truncated{});
}

}  // namespace

TEST(FirstExit, Examples) {
  const auto a = first_exit_instant(flags_seq({false, false, true, false}, false));
  ASSERT_TRUE(a.instant.has_value());
  EXPECT_EQ(*a.instant, 3);

  EXPECT_TRUE(first_exit_instant(flags_seq({true}, true)).infinite());
  EXPECT_TRUE(first_exit_instant(flags_seq({}, true)).infinite());

  const auto c = first_exit_instant(flags_seq({true, false, true}, true));
  ASSERT_TRUE(c.instant.has_value());
  EXPECT_EQ(*c.instant, 1);
}

TEST(FirstExit, ExitIntoTail) {
  const auto e = first_exit_instant(flags_seq({false, true, true}, false));
  ASSERT_TRUE(e.instant.has_value());
  EXPECT_EQ(*e.instant, 3);
}

TEST(FirstExit, TruncatedWithoutExitIsCaveated) {
  const auto e = first_exit_instant(truncated({false, true, true}));
  EXPECT_TRUE(e.infinite());
  EXPECT_TRUE(e.beyond_horizon_unknown);
}

TEST(IsAcceptable, AllInIsAcceptable) {
  for (int ks : {1, 3, 50}) {
    for (int kp : {1, 4, 100}) {
      EXPECT_TRUE(is_acceptable(flags_seq({true}, true), ks, kp).acceptable);
    }
  }
}

TEST(IsAcceptable, NeverReaches) {
  const auto v = is_acceptable(flags_seq({false}, false), 3, 5);
  EXPECT_FALSE(v.acceptable);
  ASSERT_TRUE(v.failure.has_value());
  EXPECT_EQ(*v.failure, FailureCase::NeverReaches);
}

TEST(IsAcceptable, EntersLate) {
  std::vector<bool> f{false, false, false, false, true};
  const auto v = is_acceptable(flags_seq(f, true), 3, 5);
  EXPECT_FALSE(v.acceptable);
  EXPECT_EQ(*v.failure, FailureCase::EntersLate);
  EXPECT_EQ(*v.entered_at, 4);
  EXPECT_TRUE(is_acceptable(flags_seq({false, false, false, true}, true), 3, 5).acceptable);
}

TEST(IsAcceptable, ExitAtPermanenceTimeIsEarly) {
  // Enters at k_s = 2, exits at k_exit = k_p = 4.
  std::vector<bool> f{false, false, true, true, false};
  const auto v = is_acceptable(flags_seq(f, false), 2, 4);
  EXPECT_FALSE(v.acceptable);
  EXPECT_EQ(*v.failure, FailureCase::ExitsEarly);
  EXPECT_EQ(*v.first_exit.instant, 4);

  std::vector<bool> later{false, false, true, true, true, false};
  EXPECT_TRUE(is_acceptable(flags_seq(later, false), 2, 4).acceptable);
}

TEST(IsAcceptable, TruncatedShortPrefixIsUndecidable) {
  EXPECT_THROW(is_acceptable(truncated({false, true}), 3, 5), UndecidableError);
  EXPECT_THROW(is_acceptable(truncated({false, false}), 3, 5), UndecidableError);
  EXPECT_TRUE(is_acceptable(truncated({false, true, true, true, true, true}), 3, 5).acceptable);
  // Decided regardless of the continuation.
  const auto v = is_acceptable(truncated({false, false, false, false}), 3, 5);
  EXPECT_EQ(*v.failure, FailureCase::NeverReaches);
  EXPECT_EQ(*is_acceptable(truncated({true, false}), 3, 5).failure, FailureCase::ExitsEarly);
}

TEST(DiscountedReturn, HandGeometricSum) {
  const auto seq =
      StateSpaceSequence::from_flags({false, false, false}, {0.0, 1.0, 1.0}, ExactConstantTail{});
  const auto r = discounted_return(seq, ShapingParams{0.5, 0.0, 0.0, 0.0}, false);
  ASSERT_TRUE(r.exact);
  EXPECT_DOUBLE_EQ(r.value(), 1.5);
  long double brute = 0.0L, w = 1.0L;
  std::vector<double> rewards(200, 0.0);
  rewards[0] = rewards[1] = 1.0;
  for (double x : rewards) {
    brute += w * x;
    w *= 0.5L;
  }
  EXPECT_EQ(r.value(), static_cast<double>(brute));
}

TEST(DiscountedReturn, EmptyPrefixWitness) {
  const ShapingParams p{0.9, 5.0, 3.0, -10.0};
  const double l_in = -0.5;
  const auto seq = StateSpaceSequence::from_flags({true}, {0.0}, ExactConstantTail{l_in, true});
  const auto r = discounted_return(seq, p, true);
  EXPECT_NEAR(r.value(), (l_in + p.r_c_in) / (1.0 - p.gamma), 1e-12);
}

TEST(DiscountedReturn, ZeroRewardIsZero) {
  const auto r = discounted_return(flags_seq({false, true}, true), ShapingParams{0.9, 0, 0, 0}, true);
  EXPECT_EQ(r.value(), 0.0);
}

TEST(DiscountedReturn, CorrectionAttribution) {
  // x1 in G (r_c_in at k=1), x2 out (r_c_exit at k=2), out afterwards.
  const ShapingParams p{0.5, 0.0, 4.0, -8.0};
  const auto r = discounted_return(flags_seq({false, true, false}, false), p, true);
  EXPECT_DOUBLE_EQ(r.value(), 4.0 + 0.5 * -8.0);
  EXPECT_DOUBLE_EQ(discounted_return(flags_seq({false, true, false}, false), p, false).value(), 0.0);
}

TEST(DiscountedReturn, TruncatedEnclosesEveryContinuation) {
  const ShapingParams p{0.9, 0.0, 2.0, -3.0};
  const auto t = StateSpaceSequence::from_flags({false, true, true}, {0.0, -1.0, 0.5}, Truncated{});
  EXPECT_THROW(discounted_return(t, p, true), std::invalid_argument);
  const double rmax = 3.5;
  const auto iv = discounted_return(t, p, true, rmax);
  EXPECT_FALSE(iv.exact);
  for (bool in : {false, true}) {
    for (double r : {-0.5, 0.0, 0.5}) {
      const auto e = StateSpaceSequence::from_flags({false, true, true}, {0.0, -1.0, 0.5},
                                                    ExactConstantTail{r, in});
      const double v = discounted_return(e, p, true).value();
      EXPECT_LE(iv.lo, v);
      EXPECT_GE(iv.hi, v);
    }
  }
}

TEST(DiscountedReturn, RejectsBadGamma) {
  EXPECT_THROW(discounted_return(flags_seq({true}, true), ShapingParams{1.0, 0, 0, 0}, true),
               std::invalid_argument);
}

TEST(HighReturn, Examples) {
  // Zero reward, sigma = 1.
  EXPECT_EQ(is_high_return(flags_seq({false}, false), ShapingParams{0.9, 1.0, 0.0, 0.0}).status,
            HighReturn::no);
  // Never in G at U_out: U_out / (1 - gamma) <= sigma.
  const ShapingParams p{0.9, -10.0, 2.0, -5.0};
  EXPECT_EQ(is_high_return(flags_seq({false}, false, -1.0), p).status, HighReturn::no);
  // All-in witness with r_c_in > sigma (1 - gamma) - L_in.
  EXPECT_EQ(is_high_return(flags_seq({true}, true, -0.5), p).status, HighReturn::yes);
}

TEST(HighReturn, StraddlingIntervalIsIndeterminate) {
  const auto t = StateSpaceSequence::from_flags({true, true}, {0.0, 0.0}, Truncated{});
  const ShapingParams p{0.9, 1.0, 0.0, 0.0};
  const auto h = is_high_return(t, p, 10.0);
  EXPECT_EQ(h.status, HighReturn::indeterminate);
  EXPECT_LT(h.value.lo, 1.0);
  EXPECT_GT(h.value.hi, 1.0);
}

TEST(Classify, WitnessIsConsistent) {
  const ShapingParams p{0.9, -10.0, 2.0, -5.0};
  ControlRequirements req{GoalRegion::ball({0.0}, 1.0), 2, 3};
  const auto seq = StateSpaceSequence::from_states({{0.0}}, {0.0}, req.goal,
                                                   ExactConstantTail{-0.5, true});
  const auto c = classify(seq, p, req);
  EXPECT_EQ(c.high_return, HighReturn::yes);
  EXPECT_TRUE(c.acceptability.acceptable);
  EXPECT_TRUE(c.proposition_consistent);
}

TEST(Classify, EntersLateMaxRewardsStaysAtOrBelowSigma) {
  const RewardBounds b{-0.5, 0.0, -2.0, -1.0};
  const double gamma = 0.9, sigma = 0.0;
  const int ks = 4;
  const ShapingParams p{gamma, sigma, r_c_in_upper(b, gamma, ks, sigma), -100.0};
  std::vector<bool> f(static_cast<std::size_t>(ks + 1), false);
  std::vector<double> r(f.size(), b.upper_out);
  const auto seq = StateSpaceSequence::from_flags(f, r, ExactConstantTail{b.upper_in, true});
  const double j = discounted_return(seq, p, true).value();
  const double gs = std::pow(gamma, ks);
  const double bound = b.upper_out * (1 - gs) / (1 - gamma) + (b.upper_in + p.r_c_in) * gs / (1 - gamma);
  EXPECT_NEAR(j, bound, 1e-12);
  EXPECT_LE(j, sigma + 1e-12);
}

TEST(RewardMagnitude, CoversEveryCombination) {
  const RewardBounds b{-1.0, 2.0, -3.0, 1.0};
  const ShapingParams p{0.9, 0.0, 5.0, -20.0};
  const double m = reward_magnitude_bound(b, p);
  EXPECT_DOUBLE_EQ(m, 23.0);
}

TEST(SequenceIo, RoundTrip) {
  const auto goal = GoalRegion::ball({0.0, 0.0}, 0.5);
  const auto seq = StateSpaceSequence::from_states({{1.0, 2.0}, {0.1, -0.2}, {0.3, 1.0 / 3.0}},
                                                   {0.0, -1.25, 0.125}, goal,
                                                   BoundedTail{-1.0, 0.5, true});
  std::stringstream s;
  write_sequence(s, seq);
  const auto back = read_sequence(s);
  ASSERT_EQ(back.prefix_length(), 3);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.prefix()[k].state, seq.prefix()[k].state);
    EXPECT_EQ(back.prefix()[k].in_goal, seq.prefix()[k].in_goal);
  }
  EXPECT_EQ(back.prefix()[1].base_reward, -1.25);
  const auto* tail = std::get_if<BoundedTail>(&back.tail());
  ASSERT_NE(tail, nullptr);
  EXPECT_EQ(tail->reward_lo, -1.0);
  EXPECT_TRUE(tail->in_goal);

  std::stringstream bad("k,x\n0,1\n");
  EXPECT_THROW(read_sequence(bad), std::invalid_argument);
}

TEST(SequenceIo, VerdictJson) {
  const auto v = is_acceptable(flags_seq({false}, false), 3, 5);
  const std::string j = verdict_to_json(v);
  EXPECT_NE(j.find("\"acceptable\":false"), std::string::npos);
  EXPECT_NE(j.find("\"failure_case\":\"never_reaches\""), std::string::npos);
}
