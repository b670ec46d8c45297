#include "rlguard/oracle.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "rlguard/acceptability.hpp"
#include "rlguard/learn.hpp"

namespace rlguard {
namespace {

using json = nlohmann::json;
using LD = long double;

// Rounding allowance for comparing a long-double sum of double-valued terms with sigma.
LD tolerance(LD abs_sum) { return 64.0L * static_cast<LD>(DBL_EPSILON) * abs_sum; }

// x_0 .. x_{T-1} membership flags, rewards[k] earned on entering x_k (k >= 1),
// followed by a constant tail that stays in or out of G forever.
struct FlagSeq {
  std::vector<bool> flags;
  std::vector<LD> rewards;
  bool tail_in = false;
  LD tail_reward = 0.0L;
};

struct OracleReturn {
  LD value = 0.0L;
  LD abs_sum = 0.0L;
};

LD correction(bool prev, bool cur, const ShapingParams& p) {
  if (cur) return p.r_c_in;
  if (prev) return p.r_c_exit;
  return 0.0L;
}

OracleReturn oracle_return(const FlagSeq& s, const ShapingParams& p) {
  const LD g = p.gamma;
  OracleReturn out;
  LD w = 1.0L;
  auto add = [&](LD term) {
    out.value += term;
    out.abs_sum += std::fabs(term);
  };
  for (std::size_t k = 1; k < s.flags.size(); ++k) {
    add(w * (s.rewards[k] + correction(s.flags[k - 1], s.flags[k], p)));
    w *= g;
  }
  const bool prev = s.flags.empty() ? s.tail_in : s.flags.back();
  add(w * (s.tail_reward + correction(prev, s.tail_in, p)));
  const LD rest = s.tail_reward + correction(s.tail_in, s.tail_in, p);
  add(w * g * rest / (1.0L - g));
  out.abs_sum += std::fabs(static_cast<LD>(p.sigma));
  return out;
}

struct ScanVerdict {
  bool acceptable = false;
  std::optional<std::int64_t> entered;
  std::optional<std::int64_t> exit;
  std::optional<FailureCase> failure;
};

// Unrolls the constant tail far enough that every event that can matter is visible.
ScanVerdict oracle_scan(const std::vector<bool>& flags, bool tail_in, int k_s, int k_p) {
  std::vector<bool> u = flags;
  const std::size_t total = flags.size() + static_cast<std::size_t>(std::max(k_s, k_p)) + 2;
  while (u.size() < total) u.push_back(tail_in);
  ScanVerdict v;
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k]) {
      v.entered = static_cast<std::int64_t>(k);
      break;
    }
  }
  for (std::size_t k = 1; k < u.size(); ++k) {
    if (u[k - 1] && !u[k]) {
      v.exit = static_cast<std::int64_t>(k);
      break;
    }
  }
  if (!v.entered) {
    v.failure = FailureCase::NeverReaches;
  } else if (*v.entered > k_s) {
    v.failure = FailureCase::EntersLate;
  } else if (v.exit && *v.exit <= k_p) {
    v.failure = FailureCase::ExitsEarly;
  }
  v.acceptable = !v.failure;
  return v;
}

StateSpaceSequence to_sequence(const FlagSeq& s) {
  std::vector<double> rewards(s.flags.size(), 0.0);
  for (std::size_t k = 1; k < s.flags.size(); ++k) rewards[k] = static_cast<double>(s.rewards[k]);
  return StateSpaceSequence::from_flags(s.flags, rewards,
                                        ExactConstantTail{static_cast<double>(s.tail_reward), s.tail_in});
}

json flags_json(const std::vector<bool>& flags) {
  std::string s;
  for (bool f : flags) s.push_back(f ? '1' : '0');
  return s;
}

json bounds_json(const RewardBounds& b) {
  return {{"U_out", b.upper_out}, {"U_in", b.upper_in}, {"L_out", b.lower_out}, {"L_in", b.lower_in}};
}

json params_json(const ShapingParams& p) {
  return {{"gamma", p.gamma}, {"sigma", p.sigma}, {"r_c_in", p.r_c_in}, {"r_c_exit", p.r_c_exit}};
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Smallest gamma for which gamma^k stays above 1e-8 up to `k_max`.
double gamma_floor(int k_max, double lowest) {
  return std::max(lowest, std::pow(1e-8, 1.0 / static_cast<double>(std::max(k_max, 1))));
}

RewardBounds random_bounds(std::mt19937_64& rng, double magnitude) {
  auto pair = [&](double& lo, double& hi) {
    lo = uniform(rng, -magnitude, magnitude);
    hi = uniform(rng, -magnitude, magnitude);
    if (lo > hi) std::swap(lo, hi);
    if (uniform_int(rng, 0, 9) == 0) lo = hi;
  };
  RewardBounds b;
  pair(b.lower_out, b.upper_out);
  pair(b.lower_in, b.upper_in);
  return b;
}

struct Draw {
  RewardBounds bounds;
  double gamma = 0.9;
  int k_s = 1;
  int k_p = 1;
};

Draw random_draw(std::mt19937_64& rng, int max_horizon, int min_k_s = 1) {
  Draw d;
  d.bounds = random_bounds(rng, 1e3);
  d.k_s = uniform_int(rng, min_k_s, std::max(min_k_s, max_horizon));
  d.k_p = uniform_int(rng, 1, max_horizon);
  d.gamma = uniform(rng, gamma_floor(std::max(d.k_s, d.k_p), 0.05), 0.999);
  return d;
}

// Goal region that is irrelevant for flag-level checks.
ControlRequirements flag_requirements(int k_s, int k_p) {
  return ControlRequirements(GoalRegion::from_predicate([](StateView) { return true; }, {0.0}), k_s,
                             k_p);
}

FlagSeq with_rewards(std::vector<bool> flags, bool tail_in, LD in_reward, LD out_reward) {
  FlagSeq s;
  s.flags = std::move(flags);
  s.rewards.resize(s.flags.size());
  for (std::size_t k = 1; k < s.flags.size(); ++k) s.rewards[k] = s.flags[k] ? in_reward : out_reward;
  s.tail_in = tail_in;
  s.tail_reward = tail_in ? in_reward : out_reward;
  return s;
}

// Random continuation: up to `len` random flags appended.
void append_random(std::vector<bool>& flags, std::mt19937_64& rng, int len) {
  const int n = uniform_int(rng, 0, len);
  bool cur = uniform_int(rng, 0, 1) == 1;
  for (int i = 0; i < n; ++i) {
    if (uniform_int(rng, 0, 3) == 0) cur = !cur;
    flags.push_back(cur);
  }
}

}  // namespace

void PropertyReport::add_counterexample(json c) {
  ++counterexample_count;
  if (counterexamples.size() < kMaxStored) counterexamples.push_back(std::move(c));
}

void PropertyReport::merge(const PropertyReport& other) {
  trials += other.trials;
  counterexample_count += other.counterexample_count;
  for (const auto& c : other.counterexamples) {
    if (counterexamples.size() < kMaxStored) counterexamples.push_back(c);
  }
}

json PropertyReport::to_json() const {
  json j;
  j["property"] = name;
  j["trials"] = trials;
  j["counterexample_count"] = counterexample_count;
  j["counterexamples"] = counterexamples;
  j["status"] = passed() ? "pass" : "fail";
  j["negative_control"] = negative_control;
  return j;
}

PropertyReport verify_proposition_high_return(int draws, int seqs_per_draw, std::uint64_t seed,
                                              PlantedViolation planted) {
  if (draws < 1 || seqs_per_draw < 1) throw std::invalid_argument("draws must be >= 1");
  PropertyReport report;
  report.name = "proposition_high_return";
  if (planted != PlantedViolation::none) {
    report.name += planted == PlantedViolation::r_c_in_above_cap ? ":planted_r_c_in"
                                                                 : ":planted_r_c_exit";
    report.negative_control = true;
  }
  std::mt19937_64 rng(seed);

  for (int d = 0; d < draws; ++d) {
    const Draw draw = random_draw(rng, 300);
    const auto req = flag_requirements(draw.k_s, draw.k_p);
    IntervalRule rule;
    if (d % 2 == 1) rule.random_seed = rng();
    ShapingParams p = shape(draw.bounds, req, draw.gamma, rule).params;
    if (planted == PlantedViolation::r_c_in_above_cap) {
      p.r_c_in += 0.1 * std::max(std::abs(p.r_c_in), 1.0);
      p.r_c_exit = r_c_exit_cap(draw.bounds, p.gamma, draw.k_p, p.sigma, p.r_c_in);
    } else if (planted == PlantedViolation::r_c_exit_above_cap) {
      p.r_c_exit += 0.1 * std::max(std::abs(p.r_c_exit), 1.0);
    }
    const LD u_in = draw.bounds.upper_in, u_out = draw.bounds.upper_out;
    const double rmax = reward_magnitude_bound(draw.bounds, p);

    auto context = [&](const char* kind, const FlagSeq& s, const OracleReturn& r) {
      return json{{"kind", kind},
                  {"bounds", bounds_json(draw.bounds)},
                  {"params", params_json(p)},
                  {"k_s", draw.k_s},
                  {"k_p", draw.k_p},
                  {"flags", flags_json(s.flags)},
                  {"tail_in", s.tail_in},
                  {"return", static_cast<double>(r.value)}};
    };
    // Unacceptable by construction; the return must not exceed sigma.
    auto check_failure_class = [&](const char* kind, const FlagSeq& s) {
      ++report.trials;
      const auto scan = oracle_scan(s.flags, s.tail_in, draw.k_s, draw.k_p);
      const auto r = oracle_return(s, p);
      if (scan.acceptable) {
        auto c = context(kind, s, r);
        c["error"] = "generator produced an acceptable sequence";
        report.add_counterexample(c);
        return;
      }
      if (r.value > static_cast<LD>(p.sigma) + tolerance(r.abs_sum)) {
        report.add_counterexample(context(kind, s, r));
      }
    };

    for (int i = 0; i < seqs_per_draw; ++i) {
      switch (i % 4) {
        case 0: {  // never reaches
          std::vector<bool> flags(static_cast<std::size_t>(uniform_int(rng, 0, 5)), false);
          check_failure_class("never_reaches", with_rewards(flags, false, u_in, u_out));
          break;
        }
        case 1: {  // enters at k_s + 1 .. k_s + 50, then anything
          const int entry = draw.k_s + (i == 1 ? 1 : uniform_int(rng, 1, 50));
          std::vector<bool> flags(static_cast<std::size_t>(entry), false);
          flags.push_back(true);
          bool tail_in = true;
          if (i % 8 == 5) {
            append_random(flags, rng, 40);
            tail_in = uniform_int(rng, 0, 1) == 1;
          }
          check_failure_class("enters_late", with_rewards(flags, tail_in, u_in, u_out));
          break;
        }
        case 2: {  // in by k_s, first exit at k_exit <= k_p
          // The first one sits on the boundary: in from the start, out exactly at k_p.
          const int k_exit = i == 2 ? draw.k_p : uniform_int(rng, 1, draw.k_p);
          const int entry = i == 2 ? 0 : uniform_int(rng, 0, std::min(draw.k_s, k_exit - 1));
          std::vector<bool> flags(static_cast<std::size_t>(entry), false);
          while (static_cast<int>(flags.size()) < k_exit) flags.push_back(true);
          flags.push_back(false);
          bool tail_in = true;
          const int variant = i == 2 ? 0 : uniform_int(rng, 0, 2);
          if (variant == 1) {
            tail_in = false;
          } else if (variant == 2) {
            append_random(flags, rng, 40);
            tail_in = uniform_int(rng, 0, 1) == 1;
          }
          check_failure_class("exits_early", with_rewards(flags, tail_in, u_in, u_out));
          break;
        }
        default: {  // random sequence, random in-bounds rewards, classified end to end
          const int len = uniform_int(rng, 1, draw.k_s + draw.k_p + 20);
          std::vector<bool> flags;
          if (uniform_int(rng, 0, 1) == 0) {
            const int entry = uniform_int(rng, 0, draw.k_s);
            flags.assign(static_cast<std::size_t>(entry), false);
            flags.insert(flags.end(), static_cast<std::size_t>(draw.k_p + 1), true);
            append_random(flags, rng, 30);
          } else {
            bool cur = uniform_int(rng, 0, 1) == 1;
            for (int k = 0; k < len; ++k) {
              if (uniform_int(rng, 0, 40) == 0) cur = !cur;
              flags.push_back(cur);
            }
          }
          FlagSeq s;
          s.flags = flags;
          s.rewards.resize(flags.size());
          const auto& b = draw.bounds;
          for (std::size_t k = 1; k < flags.size(); ++k) {
            s.rewards[k] = flags[k] ? uniform(rng, b.lower_in, b.upper_in)
                                    : uniform(rng, b.lower_out, b.upper_out);
          }
          s.tail_in = uniform_int(rng, 0, 1) == 1;
          s.tail_reward = s.tail_in ? b.upper_in : b.upper_out;
          ++report.trials;
          const auto cls = classify(to_sequence(s), p, req, rmax);
          const auto scan = oracle_scan(s.flags, s.tail_in, draw.k_s, draw.k_p);
          if (cls.acceptability.acceptable != scan.acceptable) {
            auto c = context("random", s, oracle_return(s, p));
            c["error"] = "library acceptability disagrees with the scan";
            report.add_counterexample(c);
          } else if (!cls.proposition_consistent) {
            const auto r = oracle_return(s, p);
            if (r.value > static_cast<LD>(p.sigma) + tolerance(r.abs_sum)) {
              report.add_counterexample(context("random", s, r));
            }
          }
          break;
        }
      }
    }
  }
  return report;
}

PropertyReport verify_corollary_existence(int draws, std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("draws must be >= 1");
  PropertyReport report;
  report.name = "corollary_existence";
  std::mt19937_64 rng(seed);

  for (int d = 0; d < draws; ++d) {
    // Sufficient side.
    {
      const RewardBounds b = random_bounds(rng, 1e3);
      ShapingParams p;
      p.gamma = uniform(rng, 0.05, 0.999);
      p.sigma = b.upper_out / (1.0 - p.gamma) + uniform(rng, 0.0, 1e3);
      p.r_c_in = p.sigma * (1.0 - p.gamma) - b.lower_in + uniform(rng, 1e-3, 1e3);
      p.r_c_exit = -uniform(rng, 0.0, 1e3);
      FlagSeq witness;
      witness.tail_in = true;
      witness.tail_reward = b.lower_in;
      const auto r = oracle_return(witness, p);
      const auto lib = is_high_return(
          StateSpaceSequence({}, ExactConstantTail{b.lower_in, true}), p);
      ++report.trials;
      if (!(r.value > static_cast<LD>(p.sigma)) || lib.status != HighReturn::yes) {
        report.add_counterexample({{"side", "sufficient"},
                                   {"bounds", bounds_json(b)},
                                   {"params", params_json(p)},
                                   {"witness_return", static_cast<double>(r.value)}});
      }
    }
    // Necessary side: r_c_in <= sigma (1 - gamma) - U_in, Assumption 1 kept, r_c_exit <= 0.
    {
      const RewardBounds b = random_bounds(rng, 1e3);
      ShapingParams p;
      p.gamma = uniform(rng, 0.05, 0.999);
      const double room = b.upper_out - b.lower_in + b.upper_in;
      p.sigma = (room + uniform(rng, 0.0, 1e3)) / (1.0 - p.gamma);
      const double hi = p.sigma * (1.0 - p.gamma) - b.upper_in;
      const double lo = std::min(hi, b.upper_out - b.lower_in);
      p.r_c_in = d % 10 == 0 ? hi : uniform(rng, lo, hi);
      p.r_c_exit = -uniform(rng, 0.0, 1e3);

      const LD cap = (static_cast<LD>(p.r_c_in) + b.upper_in) / (1.0L - p.gamma);
      ++report.trials;
      if (cap > static_cast<LD>(p.sigma) + tolerance(std::fabs(cap) + std::fabs(p.sigma))) {
        report.add_counterexample({{"side", "necessary_cap"},
                                   {"bounds", bounds_json(b)},
                                   {"params", params_json(p)},
                                   {"cap", static_cast<double>(cap)}});
      }
      for (int len = 1; len <= 10; ++len) {
        for (int mask = 0; mask < (1 << len); ++mask) {
          std::vector<bool> flags(static_cast<std::size_t>(len));
          for (int k = 0; k < len; ++k) flags[static_cast<std::size_t>(k)] = (mask >> k) & 1;
          for (bool tail_in : {false, true}) {
            const auto s = with_rewards(flags, tail_in, b.upper_in, b.upper_out);
            const auto r = oracle_return(s, p);
            ++report.trials;
            if (r.value > static_cast<LD>(p.sigma) + tolerance(r.abs_sum)) {
              report.add_counterexample({{"side", "necessary_search"},
                                         {"bounds", bounds_json(b)},
                                         {"params", params_json(p)},
                                         {"flags", flags_json(flags)},
                                         {"tail_in", tail_in},
                                         {"return", static_cast<double>(r.value)}});
            }
          }
        }
      }
    }
  }
  return report;
}

PropertyReport verify_kz_proposition(int k_z, int draws, std::uint64_t seed) {
  if (k_z < 1 || draws < 1) throw std::invalid_argument("k_z and draws must be >= 1");
  PropertyReport report;
  report.name = "kz_proposition:k_z=" + std::to_string(k_z);
  std::mt19937_64 rng(seed);

  for (int d = 0; d < draws; ++d) {
    Draw draw = random_draw(rng, k_z + 200, k_z);
    const auto req = flag_requirements(draw.k_s, draw.k_p);
    IntervalRule rule;
    if (d % 2 == 1) rule.random_seed = rng();
    const auto shaped = shape_advanced(draw.bounds, req, draw.gamma, k_z, rule);
    const ShapingParams& p = shaped.params;
    const auto& b = draw.bounds;
    const double rmax = reward_magnitude_bound(b, p);
    auto context = [&](const char* what) {
      return json{{"what", what}, {"bounds", bounds_json(b)}, {"params", params_json(p)},
                  {"k_s", draw.k_s},  {"k_p", draw.k_p},        {"k_z", k_z}};
    };

    ++report.trials;
    if (!shaped.certificate.existence.ok) report.add_counterexample(context("existence not implied"));

    const LD g = p.gamma;
    auto entry_bound = [&](int k) {
      const LD gk = std::pow(g, static_cast<LD>(k - 1));
      return static_cast<LD>(b.lower_out) * (1.0L - gk) / (1.0L - g) +
             (static_cast<LD>(b.lower_in) + p.r_c_in) * gk / (1.0L - g);
    };
    LD previous = 0.0L;
    for (int k = 1; k <= k_z; ++k) {
      std::vector<bool> flags(static_cast<std::size_t>(k), false);
      flags.push_back(true);
      const auto s = with_rewards(flags, true, b.lower_in, b.lower_out);
      const auto r = oracle_return(s, p);
      const LD tol = tolerance(r.abs_sum);
      ++report.trials;
      if (r.value <= static_cast<LD>(p.sigma) - tol) {
        auto c = context("entry by k_z not high-return");
        c["entry"] = k;
        c["return"] = static_cast<double>(r.value);
        report.add_counterexample(c);
      } else if (r.value > static_cast<LD>(p.sigma) + tol &&
                 is_high_return(to_sequence(s), p, rmax).status != HighReturn::yes) {
        auto c = context("library disagrees on high-return");
        c["entry"] = k;
        report.add_counterexample(c);
      }
      const LD bound = entry_bound(k);
      if (std::fabs(bound - r.value) > tol) {
        auto c = context("entering-time expression differs from the return");
        c["entry"] = k;
        report.add_counterexample(c);
      }
      if (k > 1 && bound > previous + tol) {
        auto c = context("entering-time bound not monotone");
        c["entry"] = k;
        report.add_counterexample(c);
      }
      previous = bound;
    }
  }
  return report;
}

PropertyReport verify_lemma_compatibility(int grid_points) {
  if (grid_points < 16) throw std::invalid_argument("grid needs at least 16 points");
  PropertyReport report;
  report.name = "lemma_compatibility";
  const int n = std::max(2, static_cast<int>(std::lround(std::pow(grid_points, 0.25))));

  auto axis = [n](int i) { return static_cast<double>(i) / (n - 1); };
  for (int ik = 0; ik < n; ++ik) {
    const int k_s = static_cast<int>(std::lround(std::pow(1000.0, axis(ik))));
    const double g_lo = gamma_floor(k_s, 0.05);
    for (int ig = 0; ig < n; ++ig) {
      const double gamma = g_lo + (0.999 - g_lo) * axis(ig);
      for (int id = 0; id < n; ++id) {
        const double delta = id == 0 ? 0.0 : std::pow(10.0, -2.0 + 5.0 * axis(id));
        for (int iu = 0; iu < n; ++iu) {
          const double u_out = -1e3 + 2e3 * axis(iu);
          RewardBounds b;
          b.upper_out = u_out;
          b.lower_out = u_out - delta;
          b.lower_in = -0.5 * delta - 1.0;
          b.upper_in = b.lower_in + delta;
          const int k_z = std::max(1, k_s / 2);
          const auto req = flag_requirements(k_s, k_s);
          ++report.trials;
          json where{{"bounds", bounds_json(b)}, {"gamma", gamma}, {"k_s", k_s}, {"k_z", k_z}};
          auto fail = [&](const char* what) {
            json c = where;
            c["what"] = what;
            report.add_counterexample(c);
          };

          const double bound = sigma_lower_bound(b, gamma, k_s);
          const double scale = std::max(std::abs(bound), 1.0);
          const double above = bound + 1e-3 * scale;
          const double below = bound - 1e-6 * scale;
          if (!(r_c_in_upper(b, gamma, k_s, above) > r_c_in_lower(b, gamma, above))) {
            fail("interval empty above the bound");
          }
          if (!(r_c_in_upper(b, gamma, k_s, below) <= r_c_in_lower(b, gamma, below))) {
            fail("interval non-empty below the bound");
          }
          try {
            IntervalRule rule;
            rule.sigma = above;
            if (!shape(b, req, gamma, rule).certificate.all_ok()) fail("certificate false");
          } catch (const ShapingError&) {
            fail("shape rejected sigma above the bound");
          }

          const double adv = sigma_lower_bound_advanced(b, gamma, k_s, k_z);
          if (adv < bound - 1e-12 * scale) fail("advanced bound below plain bound");
          if (delta == 0.0 && std::abs(adv - bound) > 1e-12 * scale) {
            fail("advanced bound differs with zero deltas");
          }
          try {
            IntervalRule rule;
            rule.sigma = adv + 1e-3 * std::max(std::abs(adv), 1.0);
            const auto shaped = shape_advanced(b, req, gamma, k_z, rule);
            if (!shaped.certificate.all_ok() || !shaped.certificate.existence.ok) {
              fail("advanced certificate false");
            }
            if (r_c_in_lower_kz(b, gamma, k_z, *rule.sigma) < r_c_in_lower(b, gamma, *rule.sigma)) {
              fail("k_z lower bound below the existence bound");
            }
          } catch (const ShapingError&) {
            fail("shape_advanced rejected sigma above the advanced bound");
          }
        }
      }
    }
  }
  return report;
}

long double periodic_return(const std::vector<long double>& rewards, std::size_t cycle_start,
                            long double gamma) {
  if (cycle_start >= rewards.size()) throw std::invalid_argument("cycle must be non-empty");
  LD w = 1.0L, prefix = 0.0L;
  for (std::size_t k = 0; k < cycle_start; ++k) {
    prefix += w * rewards[k];
    w *= gamma;
  }
  LD cycle = 0.0L, wc = 1.0L;
  for (std::size_t k = cycle_start; k < rewards.size(); ++k) {
    cycle += wc * rewards[k];
    wc *= gamma;
  }
  return prefix + w * cycle / (1.0L - wc);
}

PropertyReport verify_optimal_policy_lemma(const FiniteMDP& mdp, int k_s, int k_p,
                                           const ShapingParams& params) {
  mdp.validate();
  PropertyReport report;
  report.name = "optimal_policy_lemma";
  const auto req = flag_requirements(k_s, k_p);
  const int horizon = std::max(k_s, k_p) + 1;

  int n_policies = 1;
  for (int s = 0; s < mdp.n_states; ++s) n_policies *= mdp.n_actions;

  struct Outcome {
    std::vector<int> policy;
    LD value = 0.0L;
    LD abs_sum = 0.0L;
    bool acceptable = false;
  };
  std::vector<Outcome> outcomes;
  for (int code = 0; code < n_policies; ++code) {
    Outcome o;
    for (int s = 0, c = code; s < mdp.n_states; ++s, c /= mdp.n_actions) {
      o.policy.push_back(c % mdp.n_actions);
    }
    std::vector<int> states{mdp.initial_state};
    std::map<int, std::size_t> seen{{mdp.initial_state, 0}};
    std::size_t cycle_start = 0;
    for (;;) {
      const int s = states.back();
      const int t = mdp.next(s, o.policy[static_cast<std::size_t>(s)]);
      if (auto it = seen.find(t); it != seen.end()) {
        cycle_start = it->second;
        states.push_back(t);
        break;
      }
      seen[t] = states.size();
      states.push_back(t);
    }
    std::vector<LD> rewards;
    for (std::size_t k = 1; k < states.size(); ++k) {
      const int s = states[k - 1];
      const LD r = mdp.reward(s, o.policy[static_cast<std::size_t>(s)]) +
                   correction(mdp.goal[static_cast<std::size_t>(s)],
                              mdp.goal[static_cast<std::size_t>(states[k])], params);
      rewards.push_back(r);
      o.abs_sum += std::fabs(r);
    }
    o.value = periodic_return(rewards, cycle_start, params.gamma);
    o.abs_sum = o.abs_sum / (1.0L - params.gamma) + std::fabs(static_cast<LD>(params.sigma));

    // States repeat with period (size - 1 - cycle_start) from index cycle_start.
    const std::size_t period = states.size() - 1 - cycle_start;
    std::vector<bool> flags;
    for (int k = 0; k <= horizon; ++k) {
      std::size_t idx = static_cast<std::size_t>(k);
      if (idx >= states.size() - 1) idx = cycle_start + (idx - cycle_start) % period;
      flags.push_back(mdp.goal[static_cast<std::size_t>(states[idx])]);
    }
    const auto seq =
        StateSpaceSequence::from_flags(flags, std::vector<double>(flags.size(), 0.0), Truncated{});
    o.acceptable = is_acceptable(seq, req).acceptable;
    outcomes.push_back(std::move(o));
    ++report.trials;
  }

  LD best = outcomes.front().value;
  for (const auto& o : outcomes) best = std::max(best, o.value);
  const LD sigma = params.sigma;
  auto record = [&](const Outcome& o, const char* what) {
    json tables{{"transitions", mdp.transitions},
                {"goal", mdp.goal},
                {"base_reward", mdp.base_reward},
                {"n_states", mdp.n_states},
                {"n_actions", mdp.n_actions}};
    report.add_counterexample({{"what", what},
                               {"mdp", tables},
                               {"policy", o.policy},
                               {"return", static_cast<double>(o.value)},
                               {"params", params_json(params)},
                               {"k_s", k_s},
                               {"k_p", k_p}});
  };
  for (const auto& o : outcomes) {
    const LD tol = tolerance(o.abs_sum);
    if (o.value > sigma + tol && !o.acceptable) record(o, "high-return policy not acceptable");
    if (best > sigma + tol && o.value >= best - tol && !o.acceptable) {
      record(o, "optimal policy not acceptable");
    }
  }
  return report;
}

PropertyReport verify_optimal_policy_exhaustive(int max_states, int max_actions,
                                                std::uint64_t seed) {
  if (max_states < 1 || max_states > 3 || max_actions < 1 || max_actions > 2) {
    throw std::invalid_argument("exhaustive enumeration supports up to 3 states and 2 actions");
  }
  PropertyReport report;
  report.name = "optimal_policy_exhaustive";
  std::mt19937_64 rng(seed);
  const RewardBounds b{-1.0, 0.0, -2.0, -1.0};
  const int k_s = 2, k_p = 4;
  const double gamma = 0.9;
  const auto params = shape(b, flag_requirements(k_s, k_p), gamma).params;

  for (int n = 1; n <= max_states; ++n) {
    for (int na = 1; na <= max_actions; ++na) {
      const int cells = n * na;
      int tables = 1;
      for (int c = 0; c < cells; ++c) tables *= n;
      for (int code = 0; code < tables; ++code) {
        for (int gmask = 0; gmask < (1 << n); ++gmask) {
          FiniteMDP m;
          m.n_states = n;
          m.n_actions = na;
          for (int c = 0, x = code; c < cells; ++c, x /= n) m.transitions.push_back(x % n);
          for (int s = 0; s < n; ++s) m.goal.push_back((gmask >> s) & 1);
          for (int c = 0; c < cells; ++c) {
            const bool in = m.goal[static_cast<std::size_t>(m.transitions[static_cast<std::size_t>(c)])];
            m.base_reward.push_back(in ? uniform(rng, b.lower_in, b.upper_in)
                                       : uniform(rng, b.lower_out, b.upper_out));
          }
          report.merge(verify_optimal_policy_lemma(m, k_s, k_p, params));
        }
      }
    }
  }
  return report;
}

PropertyReport verify_sign_lemma(int draws, std::uint64_t seed) {
  PropertyReport report;
  report.name = "sign_lemma";
  std::mt19937_64 rng(seed);
  auto magnitude = [&] { return std::pow(10.0, uniform(rng, -6.0, 6.0)); };
  for (int i = 0; i < draws; ++i) {
    double b = magnitude() * ((i & 2) ? -1.0 : 1.0);
    double a;
    if (i % 3 == 0) {
      // Near the premise boundary |a - b| = |b|.
      a = b + b * uniform(rng, -1.0, 1.0) * (1.0 + uniform(rng, -1e-9, 1e-9));
    } else {
      a = magnitude() * ((i & 1) ? -1.0 : 1.0);
    }
    if (i % 1000 == 999) b = 0.0;
    ++report.trials;
    if (sign_lemma_premise(a, b) && sign_of(a) != sign_of(b)) {
      report.add_counterexample({{"a", a}, {"b", b}});
    }
  }
  return report;
}

PropertyReport verify_exact_tail_returns(int sequences, int terms, double tol,
                                         std::uint64_t seed) {
  PropertyReport report;
  report.name = "exact_tail_returns";
  std::mt19937_64 rng(seed);
  for (int i = 0; i < sequences; ++i) {
    ShapingParams p;
    p.gamma = uniform(rng, 0.05, 0.99);
    p.r_c_in = uniform(rng, -1e2, 1e2);
    p.r_c_exit = uniform(rng, -1e2, 1e2);
    const bool corrected = uniform_int(rng, 0, 3) != 0;
    const int len = uniform_int(rng, 0, 60);
    std::vector<bool> flags;
    std::vector<double> rewards;
    for (int k = 0; k < len; ++k) {
      flags.push_back(uniform_int(rng, 0, 1) == 1);
      rewards.push_back(uniform(rng, -1e2, 1e2));
    }
    const ExactConstantTail tail{uniform(rng, -1e2, 1e2), uniform_int(rng, 0, 1) == 1};
    const auto seq = StateSpaceSequence::from_flags(flags, rewards, tail);
    const double exact = discounted_return(seq, p, corrected).value();

    LD brute = 0.0L, w = 1.0L;
    for (int k = 1; k <= terms; ++k) {
      const bool prev = k - 1 < len ? flags[static_cast<std::size_t>(k - 1)] : tail.in_goal;
      const bool cur = k < len ? flags[static_cast<std::size_t>(k)] : tail.in_goal;
      const LD base = k < len ? rewards[static_cast<std::size_t>(k)] : tail.base_reward;
      brute += w * (base + (corrected ? correction(prev, cur, p) : 0.0L));
      w *= p.gamma;
    }
    ++report.trials;
    if (std::fabs(static_cast<LD>(exact) - brute) > tol) {
      report.add_counterexample({{"params", params_json(p)},
                                 {"corrected", corrected},
                                 {"flags", flags_json(flags)},
                                 {"rewards", rewards},
                                 {"tail_reward", tail.base_reward},
                                 {"tail_in", tail.in_goal},
                                 {"exact", exact},
                                 {"brute_force", static_cast<double>(brute)}});
    }
  }
  return report;
}

PropertyReport verify_acceptability_scan(int max_length) {
  PropertyReport report;
  report.name = "acceptability_scan";
  const int horizons[] = {1, 2, 5, 12};
  for (int len = 1; len <= max_length; ++len) {
    for (int mask = 0; mask < (1 << len); ++mask) {
      std::vector<bool> flags(static_cast<std::size_t>(len));
      for (int k = 0; k < len; ++k) flags[static_cast<std::size_t>(k)] = (mask >> k) & 1;
      const std::vector<double> zeros(flags.size(), 0.0);
      for (int k_s : horizons) {
        for (int k_p : horizons) {
          auto fail = [&](const char* what, const char* tail) {
            report.add_counterexample({{"what", what}, {"flags", flags_json(flags)},
                                       {"tail", tail}, {"k_s", k_s}, {"k_p", k_p}});
          };
          for (bool tail_in : {false, true}) {
            ++report.trials;
            const auto seq = StateSpaceSequence::from_flags(flags, zeros, ExactConstantTail{0.0, tail_in});
            const auto scan = oracle_scan(flags, tail_in, k_s, k_p);
            const auto v = is_acceptable(seq, k_s, k_p);
            const auto exit = first_exit_instant(seq);
            const char* tail = tail_in ? "in" : "out";
            if (v.acceptable != scan.acceptable || v.failure != scan.failure) fail("verdict", tail);
            if (v.entered_at != scan.entered) fail("entered_at", tail);
            if (exit.instant != scan.exit || exit.beyond_horizon_unknown) fail("first_exit", tail);
          }
          ++report.trials;
          const auto seq = StateSpaceSequence::from_flags(flags, zeros, Truncated{});
          const auto all_in = oracle_scan(flags, true, k_s, k_p);
          const auto all_out = oracle_scan(flags, false, k_s, k_p);
          const bool decidable = all_in.acceptable == all_out.acceptable;
          try {
            const auto v = is_acceptable(seq, k_s, k_p);
            if (!decidable) fail("decided an undecidable prefix", "truncated");
            else if (v.acceptable != all_in.acceptable) fail("truncated verdict", "truncated");
          } catch (const UndecidableError&) {
            if (decidable) fail("refused a decidable prefix", "truncated");
          }
          const auto exit = first_exit_instant(seq);
          std::optional<std::int64_t> seen;
          for (int k = 1; k < len && !seen; ++k) {
            if (flags[static_cast<std::size_t>(k - 1)] && !flags[static_cast<std::size_t>(k)]) seen = k;
          }
          if (exit.instant != seen || exit.beyond_horizon_unknown == seen.has_value()) {
            fail("truncated first_exit", "truncated");
          }
        }
      }
    }
  }
  return report;
}

PropertyReport verify_feasibility_integrator() {
  PropertyReport report;
  report.name = "feasibility_integrator";
  const auto goal = GoalRegion::from_predicate([](StateView x) { return x[0] <= 0.0; }, {0.0},
                                               [](StateView x) { return std::max(0.0, x[0]); });
  std::vector<State> states, actions;
  for (int i = -10; i <= 20; ++i) states.push_back({static_cast<double>(i)});
  for (int i = -6; i <= 6; ++i) actions.push_back({0.5 * i});
  const double h = max_step_norm([](StateView, StateView u) { return State{u[0]}; }, states, actions);
  const State x0{10.0};
  ++report.trials;
  if (h != 3.0) report.add_counterexample({{"what", "step bound"}, {"H", h}});
  ++report.trials;
  if (feasibility_min_settling(x0, goal, h) != 4) {
    report.add_counterexample({{"what", "ceil(delta/H)"}, {"value", feasibility_min_settling(x0, goal, h)}});
  }
  ++report.trials;
  if (!settling_time_infeasible(3, x0, goal, h) || settling_time_infeasible(4, x0, goal, h)) {
    report.add_counterexample({{"what", "infeasibility flag"}});
  }
  const int na = static_cast<int>(actions.size());
  for (int a = 0; a < na; ++a) {
    for (int b = 0; b < na; ++b) {
      for (int c = 0; c < na; ++c) {
        ++report.trials;
        double x = x0[0];
        bool reached = false;
        for (int u : {a, b, c}) {
          x += actions[static_cast<std::size_t>(u)][0];
          reached = reached || goal.contains(State{x});
        }
        if (reached) {
          report.add_counterexample({{"what", "goal reached in 3 steps"},
                                     {"inputs", {actions[a][0], actions[b][0], actions[c][0]}}});
        }
      }
    }
  }
  return report;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"all",         "proposition", "corollary",
                                              "kz",          "lemma",       "optimal",
                                              "sign",        "returns",     "acceptability",
                                              "feasibility", "negative"};
  return names;
}

std::vector<PropertyReport> run_suite(const std::string& suite, std::uint64_t seed) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw std::invalid_argument("unknown suite '" + suite + "'");
  }
  const bool all = suite == "all";
  std::vector<PropertyReport> out;
  if (all || suite == "proposition") out.push_back(verify_proposition_high_return(100, 300, seed));
  if (all || suite == "corollary") out.push_back(verify_corollary_existence(100, seed + 1));
  if (all || suite == "kz") {
    for (int k_z : {1, 5, 20, 100}) {
      out.push_back(verify_kz_proposition(k_z, 50, seed + 2 + static_cast<std::uint64_t>(k_z)));
    }
  }
  if (all || suite == "lemma") out.push_back(verify_lemma_compatibility(10000));
  if (all || suite == "optimal") out.push_back(verify_optimal_policy_exhaustive(3, 2, seed + 3));
  if (all || suite == "sign") out.push_back(verify_sign_lemma(100000, seed + 4));
  if (all || suite == "returns") out.push_back(verify_exact_tail_returns(1000, 10000, 1e-9, seed + 5));
  if (all || suite == "acceptability") out.push_back(verify_acceptability_scan(12));
  if (all || suite == "feasibility") out.push_back(verify_feasibility_integrator());
  if (all || suite == "negative") {
    out.push_back(verify_proposition_high_return(20, 100, seed + 6, PlantedViolation::r_c_in_above_cap));
    out.push_back(verify_proposition_high_return(20, 100, seed + 7, PlantedViolation::r_c_exit_above_cap));
  }
  return out;
}

}  // namespace rlguard
