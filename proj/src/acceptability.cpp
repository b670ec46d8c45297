#include "rlguard/acceptability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rlguard/config.hpp"

namespace rlguard {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::optional<bool> tail_membership(const SequenceTail& tail) {
  return std::visit(Overloaded{[](const ExactConstantTail& t) -> std::optional<bool> { return t.in_goal; },
                               [](const BoundedTail& t) -> std::optional<bool> { return t.in_goal; },
                               [](const Truncated&) -> std::optional<bool> { return std::nullopt; }},
                    tail);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_number(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument("sequence: '" + s + "' is not a number");
  }
  return v;
}

}  // namespace

StateSpaceSequence::StateSpaceSequence(std::vector<SequenceRecord> prefix, SequenceTail tail)
    : prefix_(std::move(prefix)), tail_(std::move(tail)) {
  if (const auto* b = std::get_if<BoundedTail>(&tail_); b && !(b->reward_lo <= b->reward_hi)) {
    throw std::invalid_argument("bounded tail needs lo <= hi");
  }
}

StateSpaceSequence StateSpaceSequence::from_flags(const std::vector<bool>& flags,
                                                  const std::vector<double>& base_rewards,
                                                  SequenceTail tail) {
  if (flags.size() != base_rewards.size()) {
    throw std::invalid_argument("from_flags: flags and rewards differ in length");
  }
  std::vector<SequenceRecord> prefix(flags.size());
  for (std::size_t k = 0; k < flags.size(); ++k) {
    prefix[k].in_goal = flags[k];
    prefix[k].base_reward = base_rewards[k];
  }
  return {std::move(prefix), std::move(tail)};
}

StateSpaceSequence StateSpaceSequence::from_states(const std::vector<State>& states,
                                                   const std::vector<double>& base_rewards,
                                                   const GoalRegion& goal, SequenceTail tail) {
  if (states.size() != base_rewards.size()) {
    throw std::invalid_argument("from_states: states and rewards differ in length");
  }
  std::vector<SequenceRecord> prefix(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    prefix[k].state = states[k];
    prefix[k].base_reward = base_rewards[k];
    prefix[k].in_goal = goal.contains(states[k], static_cast<std::int64_t>(k));
  }
  return {std::move(prefix), std::move(tail)};
}

std::optional<bool> StateSpaceSequence::membership(std::int64_t k) const {
  if (k < 0) throw std::out_of_range("negative time index");
  if (k < prefix_length()) return prefix_[static_cast<std::size_t>(k)].in_goal;
  return tail_membership(tail_);
}

ReturnValue ReturnValue::interval(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("return interval needs lo <= hi");
  return {lo, hi, false};
}

double ReturnValue::value() const {
  if (!exact) throw std::logic_error("return value is an interval, not exact");
  return lo;
}

FirstExit first_exit_instant(const StateSpaceSequence& seq) {
  const auto& p = seq.prefix();
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k - 1].in_goal && !p[k].in_goal) return {static_cast<std::int64_t>(k), false};
  }
  if (seq.truncated()) return {std::nullopt, true};
  const bool tail_in = *tail_membership(seq.tail());
  if (!p.empty() && p.back().in_goal && !tail_in) return {seq.prefix_length(), false};
  return {std::nullopt, false};
}

AcceptabilityVerdict is_acceptable(const StateSpaceSequence& seq, int k_s, int k_p) {
  if (k_s < 1 || k_p < 1) throw std::invalid_argument("k_s and k_p must be >= 1");
  AcceptabilityVerdict v;
  const auto& p = seq.prefix();
  const std::int64_t last_known = seq.prefix_length() - 1;

  for (std::size_t k = 0; k < p.size() && !v.entered_at; ++k) {
    if (p[k].in_goal) v.entered_at = static_cast<std::int64_t>(k);
  }
  if (!v.entered_at && !seq.truncated() && *tail_membership(seq.tail())) {
    v.entered_at = seq.prefix_length();
  }
  v.first_exit = first_exit_instant(seq);

  // Each condition: true, false, or unknown (truncated prefix too short).
  std::optional<bool> settles;
  if (v.entered_at) {
    settles = *v.entered_at <= k_s;
  } else if (!seq.truncated() || last_known >= k_s) {
    settles = false;
  }

  std::optional<bool> stays;
  if (v.first_exit.instant) {
    stays = *v.first_exit.instant > k_p;
  } else if (!v.first_exit.beyond_horizon_unknown || last_known >= k_p) {
    stays = true;
  }

  if (settles == false) {
    v.failure = v.entered_at ? FailureCase::EntersLate : FailureCase::NeverReaches;
  } else if (stays == false) {
    v.failure = FailureCase::ExitsEarly;
  } else if (!settles || !stays) {
    throw UndecidableError("truncated sequence of length " + std::to_string(seq.prefix_length()) +
                           " cannot decide acceptability for k_s=" + std::to_string(k_s) +
                           ", k_p=" + std::to_string(k_p));
  }
  v.acceptable = !v.failure.has_value();
  return v;
}

AcceptabilityVerdict is_acceptable(const StateSpaceSequence& seq,
                                   const ControlRequirements& req) {
  return is_acceptable(seq, req.settling_time, req.permanence_time);
}

double correction_reward(bool prev_in_goal, bool in_goal, const ShapingParams& params) {
  if (in_goal) return params.r_c_in;
  if (prev_in_goal) return params.r_c_exit;
  return 0.0;
}

ReturnValue discounted_return(const StateSpaceSequence& seq, const ShapingParams& params,
                              bool correction_enabled,
                              std::optional<double> reward_magnitude_bound) {
  const double gamma = params.gamma;
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  auto corr = [&](bool prev, bool cur) {
    return correction_enabled ? correction_reward(prev, cur, params) : 0.0;
  };

  const auto& p = seq.prefix();
  double sum = 0.0;
  double weight = 1.0;  // gamma^{k-1} for the reward at index k
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (!std::isfinite(p[k].base_reward)) {
      throw std::invalid_argument("missing or non-finite base reward at k=" + std::to_string(k));
    }
    sum += weight * (p[k].base_reward + corr(p[k - 1].in_goal, p[k].in_goal));
    weight *= gamma;
  }
  // `weight` now multiplies the first reward after the prefix.

  const double geometric = 1.0 / (1.0 - gamma);
  return std::visit(
      Overloaded{
          [&](const ExactConstantTail& t) {
            const bool prev = p.empty() ? t.in_goal : p.back().in_goal;
            const double rest = corr(t.in_goal, t.in_goal);
            const double first = corr(prev, t.in_goal);
            return ReturnValue::exact_value(
                sum + weight * ((t.base_reward + rest) * geometric + (first - rest)));
          },
          [&](const BoundedTail& t) {
            const bool prev = p.empty() ? t.in_goal : p.back().in_goal;
            const double rest = corr(t.in_goal, t.in_goal);
            const double first = corr(prev, t.in_goal);
            const double lo = sum + weight * ((t.reward_lo + rest) * geometric + (first - rest));
            const double hi = sum + weight * ((t.reward_hi + rest) * geometric + (first - rest));
            return ReturnValue::interval(lo, hi);
          },
          [&](const Truncated&) {
            if (!reward_magnitude_bound || !(*reward_magnitude_bound >= 0.0)) {
              throw std::invalid_argument("truncated return needs a reward magnitude bound");
            }
            const double slack = weight * *reward_magnitude_bound * geometric;
            return ReturnValue::interval(sum - slack, sum + slack);
          }},
      seq.tail());
}

HighReturnResult is_high_return(const StateSpaceSequence& seq, const ShapingParams& params,
                                std::optional<double> reward_magnitude_bound) {
  HighReturnResult r;
  r.value = discounted_return(seq, params, true, reward_magnitude_bound);
  if (r.value.lo > params.sigma) {
    r.status = HighReturn::yes;
  } else if (r.value.hi <= params.sigma) {
    r.status = HighReturn::no;
  } else {
    r.status = HighReturn::indeterminate;
  }
  return r;
}

Classification classify(const StateSpaceSequence& seq, const ShapingParams& params,
                        const ControlRequirements& req,
                        std::optional<double> reward_magnitude_bound) {
  Classification c;
  const auto hr = is_high_return(seq, params, reward_magnitude_bound);
  c.high_return = hr.status;
  c.value = hr.value;
  c.acceptability = is_acceptable(seq, req);
  c.proposition_consistent = !(c.high_return == HighReturn::yes && !c.acceptability.acceptable);
  return c;
}

double reward_magnitude_bound(const RewardBounds& b, const ShapingParams& p) {
  double m = 0.0;
  for (double v : {b.upper_in + p.r_c_in, b.lower_in + p.r_c_in, b.upper_out, b.lower_out,
                   b.upper_out + p.r_c_exit, b.lower_out + p.r_c_exit}) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

const char* to_string(FailureCase f) {
  switch (f) {
    case FailureCase::NeverReaches: return "never_reaches";
    case FailureCase::EntersLate: return "enters_late";
    case FailureCase::ExitsEarly: return "exits_early";
  }
  return "?";
}

const char* to_string(HighReturn h) {
  switch (h) {
    case HighReturn::yes: return "yes";
    case HighReturn::no: return "no";
    case HighReturn::indeterminate: return "indeterminate";
  }
  return "?";
}

void write_sequence(std::ostream& out, const StateSpaceSequence& seq) {
  const auto& p = seq.prefix();
  const std::size_t dim = p.empty() ? 0 : p.front().state.size();
  out << "#sequence v1 dim=" << dim;
  std::visit(Overloaded{[&](const ExactConstantTail& t) {
                          out << " tail=exact reward=" << format_double(t.base_reward)
                              << " in_goal=" << (t.in_goal ? 1 : 0);
                        },
                        [&](const BoundedTail& t) {
                          out << " tail=bounded lo=" << format_double(t.reward_lo)
                              << " hi=" << format_double(t.reward_hi)
                              << " in_goal=" << (t.in_goal ? 1 : 0);
                        },
                        [&](const Truncated&) { out << " tail=truncated"; }},
             seq.tail());
  out << '\n';
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].state.size() != dim) throw std::invalid_argument("ragged state dimensions");
    out << k;
    for (double x : p[k].state) out << ',' << format_double(x);
    out << ',' << (p[k].in_goal ? 1 : 0) << ',' << format_double(p[k].base_reward) << '\n';
  }
}

StateSpaceSequence read_sequence(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("#sequence v1", 0) != 0) {
    throw std::invalid_argument("sequence: missing '#sequence v1' header");
  }
  std::map<std::string, std::string> fields;
  for (const auto& tok : split(header.substr(std::string("#sequence v1").size()), ' ')) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("sequence header: bad field " + tok);
    fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto field = [&](const char* key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw std::invalid_argument(std::string("sequence header: missing ") + key);
    return it->second;
  };
  const auto dim = static_cast<std::size_t>(std::stoul(field("dim")));
  const std::string kind = field("tail");
  SequenceTail tail = Truncated{};
  if (kind == "exact") {
    tail = ExactConstantTail{parse_number(field("reward")), field("in_goal") == "1"};
  } else if (kind == "bounded") {
    tail = BoundedTail{parse_number(field("lo")), parse_number(field("hi")), field("in_goal") == "1"};
  } else if (kind != "truncated") {
    throw std::invalid_argument("sequence header: unknown tail kind " + kind);
  }

  std::vector<SequenceRecord> prefix;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, ',');
    if (cols.size() != dim + 3) throw std::invalid_argument("sequence: wrong column count");
    if (std::stoll(cols[0]) != static_cast<long long>(prefix.size())) {
      throw std::invalid_argument("sequence: indices must be consecutive from 0");
    }
    SequenceRecord r;
    for (std::size_t i = 0; i < dim; ++i) r.state.push_back(parse_number(cols[1 + i]));
    r.in_goal = cols[dim + 1] == "1";
    r.base_reward = parse_number(cols[dim + 2]);
    prefix.push_back(std::move(r));
  }
  return {std::move(prefix), std::move(tail)};
}

std::string verdict_to_json(const AcceptabilityVerdict& v) {
  nlohmann::json j;
  j["acceptable"] = v.acceptable;
  j["entered_at"] = v.entered_at ? nlohmann::json(*v.entered_at) : nlohmann::json(nullptr);
  j["first_exit"] = v.first_exit.instant ? nlohmann::json(*v.first_exit.instant)
                                         : nlohmann::json("inf");
  j["first_exit_beyond_horizon_unknown"] = v.first_exit.beyond_horizon_unknown;
  j["failure_case"] = v.failure ? nlohmann::json(to_string(*v.failure)) : nlohmann::json(nullptr);
  return j.dump();
}

}  // namespace rlguard
