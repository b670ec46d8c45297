#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlguard/envs/finite_mdp.hpp"
#include "rlguard/shaping.hpp"

namespace rlguard {

/// Outcome of one brute-force property check. Counterexamples carry their full
/// inputs so they can be replayed; only the first `kMaxStored` are kept.
struct PropertyReport {
  static constexpr std::size_t kMaxStored = 20;

  std::string name;
  std::int64_t trials = 0;
  std::int64_t counterexample_count = 0;
  std::vector<nlohmann::json> counterexamples;
  /// Planted-violation suite: success means counterexamples were found.
  bool negative_control = false;

  bool passed() const { return counterexample_count == 0; }
  bool as_expected() const { return negative_control ? !passed() : passed(); }
  void add_counterexample(nlohmann::json c);
  void merge(const PropertyReport& other);
  nlohmann::json to_json() const;
};

/// Deliberate assumption violations for negative-control runs.
enum class PlantedViolation { none, r_c_in_above_cap, r_c_exit_above_cap };

/// Random (bounds, gamma, k_s, k_p) draws, shaped params, adversarial sequences
/// in each failure class with region-maximal rewards plus random sequences
/// classified end to end. A planted violation pushes r_c_in (or r_c_exit) above
/// its cap, so late entries (or early exits) must show up as counterexamples.
PropertyReport verify_proposition_high_return(int draws, int seqs_per_draw, std::uint64_t seed,
                                              PlantedViolation planted = PlantedViolation::none);

/// Sufficient side: the all-in witness is high-return. Necessary side: with
/// r_c_in <= sigma (1 - gamma) - U_in no short sequence is high-return and the
/// analytic cap stays at or below sigma.
PropertyReport verify_corollary_existence(int draws, std::uint64_t seed);

/// Under advanced params, sequences entering at k = 1..k_z with minimal rewards
/// and never leaving are high-return; the entering-time bound is monotone.
PropertyReport verify_kz_proposition(int k_z, int draws, std::uint64_t seed);

/// Grid over (gamma, k_s, Delta_in, U_out, ...): sigma above each bound gives a
/// non-empty interval and passing certificates, below it an empty interval.
PropertyReport verify_lemma_compatibility(int grid_points);

/// One MDP: if some policy is high-return, every return-maximizing policy is acceptable
/// (and so is every high-return policy).
PropertyReport verify_optimal_policy_lemma(const FiniteMDP& mdp, int settling_time,
                                           int permanence_time, const ShapingParams& params);

/// Every deterministic MDP with up to `max_states` states and `max_actions` actions,
/// every goal assignment, rewards drawn inside fixed region bounds.
PropertyReport verify_optimal_policy_exhaustive(int max_states, int max_actions,
                                                std::uint64_t seed);

/// |a - b| < |b| implies sign(a) = sign(b).
PropertyReport verify_sign_lemma(int draws, std::uint64_t seed);

/// Exact constant-tail returns against `terms`-term brute-force sums.
PropertyReport verify_exact_tail_returns(int sequences, int terms, double tolerance,
                                         std::uint64_t seed);

/// First exit and acceptability against an unrolled scan over every flag string
/// of length <= `max_length` with in/out constant tails and truncated tails.
PropertyReport verify_acceptability_scan(int max_length);

/// 1-D integrator x' = x + u, |u| <= 3, x0 = 10, G = {x <= 0}: k_s = 3 is flagged
/// infeasible and exhaustive simulation of every 3-step input sequence agrees.
PropertyReport verify_feasibility_integrator();

/// Exact return of an eventually periodic trajectory: prefix + cycle / (1 - gamma^p).
long double periodic_return(const std::vector<long double>& rewards, std::size_t cycle_start,
                            long double gamma);

/// Named suites: all, proposition, corollary, kz, lemma, optimal, sign, returns,
/// acceptability, feasibility, negative.
std::vector<PropertyReport> run_suite(const std::string& suite, std::uint64_t seed);
const std::vector<std::string>& suite_names();

}  // namespace rlguard
