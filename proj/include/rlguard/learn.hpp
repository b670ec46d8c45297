#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rlguard/acceptability.hpp"
#include "rlguard/envs/environment.hpp"

namespace rlguard {

/// Dense Q(s, a) with per-entry visit counts. Zero-initialized.
class QTable {
 public:
  QTable() = default;
  QTable(int n_states, int n_actions);

  int num_states() const { return n_states_; }
  int num_actions() const { return n_actions_; }

  double value(int s, int a) const { return values_[index(s, a)]; }
  void set_value(int s, int a, double v) { values_[index(s, a)] = v; }
  std::uint64_t visits(int s, int a) const { return visits_[index(s, a)]; }
  void add_visit(int s, int a) { ++visits_[index(s, a)]; }
  void set_visits(int s, int a, std::uint64_t v) { visits_[index(s, a)] = v; }
  std::span<const double> row(int s) const;
  double max_value(int s) const;

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::uint64_t>& visit_counts() const { return visits_; }

  bool operator==(const QTable&) const = default;

 private:
  std::size_t index(int s, int a) const;

  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> values_;
  std::vector<std::uint64_t> visits_;
};

/// Q(s,a) <- (1 - alpha) Q(s,a) + alpha (r + gamma max_a' Q(s', a')).
void q_update(QTable& q, int s, int a, double reward, int next_s, double alpha, double gamma);

/// Lowest-index maximizer.
int greedy_action(const QTable& q, int s);

int epsilon_greedy_action(const QTable& q, int s, double epsilon, std::mt19937_64& rng);

struct TrainConfig {
  int sessions = 5;
  int episodes = 1000;
  int steps = 1000;
  double alpha = 0.8;
  double epsilon = 0.05;
  double gamma = 0.99;
  std::uint64_t seed = 0;
  /// Linear decay from `epsilon` to this value over the episodes; off when unset.
  std::optional<double> epsilon_final;
  /// Every this many episodes, roll out the greedy policy and stop the session
  /// once its return is certified above sigma. 0 disables.
  int certify_every = 0;
  std::int64_t certify_horizon = 3000;
  /// Worker threads for sessions; 0 picks the hardware concurrency.
  int threads = 0;

  void validate() const;
};

/// FNV-1a over the canonical text of the config.
std::uint64_t config_hash(const TrainConfig& config);
std::uint64_t session_seed(std::uint64_t base_seed, int session);

struct CertificationResult {
  double q_max_at_x0 = 0.0;
  double sigma = 0.0;
  /// Greedy rollout return is certified above sigma and so is max_u Q(x0, u).
  bool certified = false;
  /// Lower end of the rollout return interval is above sigma.
  bool rollout_high_return = false;
  HighReturn high_return = HighReturn::indeterminate;
  ReturnValue validation_return;
  /// |Q_max - J| < |J - sigma| for every J in the return interval.
  bool condition_checked = false;
  /// Verdict on the rollout; unset when the horizon is too short to decide.
  std::optional<AcceptabilityVerdict> verdict;
  StateSpaceSequence rollout{{}, Truncated{}};
};

/// Rolls out the greedy policy for `horizon` steps from reset and certifies it.
/// Any certified rollout that turns out unacceptable is counted as a soundness violation.
CertificationResult certify_policy(const QTable& q, DiscreteEnvironment& env,
                                   const ControlRequirements& req, std::int64_t horizon);

/// |a - b| < |b|.
bool sign_lemma_premise(double a, double b);
int sign_of(double v);

/// Number of certified-but-unacceptable rollouts seen in this process.
std::uint64_t soundness_violations();

struct EpisodeLog {
  int session = 0;
  int episode = 0;
  double truncated_return = 0.0;
  std::optional<std::int64_t> entered_goal_at;
  bool exited_before_kp = false;
};

struct SessionResult {
  int session = 0;
  std::uint64_t seed = 0;
  QTable q;
  std::vector<EpisodeLog> episodes;
  /// Episode index at which the periodic certification stopped training.
  std::optional<int> stopped_at;
};

struct TrainResult {
  TrainConfig config;
  std::vector<SessionResult> sessions;
};

using EnvFactory = std::function<std::unique_ptr<DiscreteEnvironment>()>;

SessionResult train_session(DiscreteEnvironment& env, const TrainConfig& config,
                            const ControlRequirements& req, int session);

/// Independent sessions, fanned out to worker threads and joined.
TrainResult train(const EnvFactory& make_env, const TrainConfig& config,
                  const ControlRequirements& req);

/// Mean and population std across sessions of the 50-sample backward moving average.
struct WindowStat {
  int episode = 0;
  int sessions = 0;
  double mean = 0.0;
  double stddev = 0.0;
};
std::vector<WindowStat> windowed_returns(const TrainResult& result, int window = 50);

void write_train_log(std::ostream& out, const TrainResult& result);
void write_window_stats(std::ostream& out, const std::vector<WindowStat>& stats);

struct QTableHeader {
  int n_states = 0;
  int n_actions = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

void write_qtable(std::ostream& out, const QTable& q, std::uint64_t seed, std::uint64_t hash);
QTable read_qtable(std::istream& in, QTableHeader* header = nullptr);

}  // namespace rlguard
