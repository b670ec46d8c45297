#include "rlguard/learn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rlguard/config.hpp"

namespace rlguard {
namespace {

std::atomic<std::uint64_t> g_soundness_violations{0};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

const char* kLogHeader = "# rlguard-train-log v1";
const char* kWindowHeader = "# rlguard-window-returns v1";
const char* kQTableHeader = "#rlguard-qtable v1";

}  // namespace

QTable::QTable(int n_states, int n_actions) : n_states_(n_states), n_actions_(n_actions) {
  if (n_states < 1 || n_actions < 1) {
    throw std::invalid_argument("Q-table needs at least one state and one action");
  }
  const auto n = static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions);
  values_.assign(n, 0.0);
  visits_.assign(n, 0);
}

std::size_t QTable::index(int s, int a) const {
  if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_) {
    throw std::out_of_range("Q-table index (" + std::to_string(s) + ", " + std::to_string(a) +
                            ") out of range");
  }
  return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions_) +
         static_cast<std::size_t>(a);
}

std::span<const double> QTable::row(int s) const {
  return {values_.data() + index(s, 0), static_cast<std::size_t>(n_actions_)};
}

double QTable::max_value(int s) const {
  const auto r = row(s);
  return *std::max_element(r.begin(), r.end());
}

void q_update(QTable& q, int s, int a, double reward, int next_s, double alpha, double gamma) {
  if (!std::isfinite(reward)) throw std::invalid_argument("q_update: non-finite reward");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("q_update: alpha outside [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("q_update: gamma outside [0, 1)");
  const double target = reward + gamma * q.max_value(next_s);
  q.set_value(s, a, (1.0 - alpha) * q.value(s, a) + alpha * target);
  q.add_visit(s, a);
}

int greedy_action(const QTable& q, int s) {
  const auto r = q.row(s);
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

int epsilon_greedy_action(const QTable& q, int s, double epsilon, std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon outside [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, q.num_actions() - 1);
    return pick(rng);
  }
  return greedy_action(q, s);
}

void TrainConfig::validate() const {
  if (sessions < 1) throw std::invalid_argument("sessions must be >= 1");
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (epsilon_final && !(*epsilon_final >= 0.0 && *epsilon_final <= 1.0)) {
    throw std::invalid_argument("epsilon_final must lie in [0, 1]");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (certify_every < 0) throw std::invalid_argument("certify_every must be >= 0");
  if (certify_horizon < 1) throw std::invalid_argument("certify_horizon must be >= 1");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
}

std::uint64_t config_hash(const TrainConfig& c) {
  std::ostringstream text;
  text << "S=" << c.sessions << ";E=" << c.episodes << ";N=" << c.steps
       << ";alpha=" << format_double(c.alpha) << ";epsilon=" << format_double(c.epsilon)
       << ";gamma=" << format_double(c.gamma) << ";seed=" << c.seed << ";epsilon_final="
       << (c.epsilon_final ? format_double(*c.epsilon_final) : "none")
       << ";certify_every=" << c.certify_every << ";certify_horizon=" << c.certify_horizon;
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text.str()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t session_seed(std::uint64_t base_seed, int session) {
  return splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(session)));
}

bool sign_lemma_premise(double a, double b) { return std::abs(a - b) < std::abs(b); }

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

std::uint64_t soundness_violations() { return g_soundness_violations.load(); }

CertificationResult certify_policy(const QTable& q, DiscreteEnvironment& env,
                                   const ControlRequirements& req, std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("certification horizon must be >= 1");
  if (q.num_states() != env.num_states() || q.num_actions() != env.num_actions()) {
    throw std::invalid_argument("Q-table dimensions do not match the environment");
  }
  const ShapingParams& params = env.shaping();
  CertificationResult c;
  c.sigma = params.sigma;

  int s = env.reset();
  c.q_max_at_x0 = q.max_value(s);
  std::vector<SequenceRecord> prefix;
  prefix.reserve(static_cast<std::size_t>(horizon) + 1);
  prefix.push_back({env.observation(), std::nullopt, 0.0, env.in_goal()});
  for (std::int64_t k = 1; k <= horizon; ++k) {
    const int a = greedy_action(q, s);
    prefix.back().action = a;
    const StepResult r = env.step(a);
    prefix.push_back({env.observation(), std::nullopt, r.base_reward, r.in_goal});
    s = r.next_state;
  }
  c.rollout = StateSpaceSequence(std::move(prefix), Truncated{});

  const auto hr = is_high_return(c.rollout, params, env.reward_magnitude_bound());
  c.high_return = hr.status;
  c.validation_return = hr.value;
  c.rollout_high_return = hr.status == HighReturn::yes;
  c.certified = c.rollout_high_return && c.q_max_at_x0 > params.sigma;

  const double lo = hr.value.lo, hi = hr.value.hi;
  const double worst_gap = std::max(std::abs(c.q_max_at_x0 - lo), std::abs(c.q_max_at_x0 - hi));
  const double closest =
      (lo <= params.sigma && params.sigma <= hi)
          ? 0.0
          : std::min(std::abs(lo - params.sigma), std::abs(hi - params.sigma));
  c.condition_checked = worst_gap < closest;

  try {
    c.verdict = is_acceptable(c.rollout, req);
  } catch (const UndecidableError&) {
    c.verdict.reset();
  }
  if (c.rollout_high_return && c.verdict && !c.verdict->acceptable) ++g_soundness_violations;
  return c;
}

SessionResult train_session(DiscreteEnvironment& env, const TrainConfig& config,
                            const ControlRequirements& req, int session) {
  config.validate();
  if (env.shaping().gamma != config.gamma) {
    throw std::invalid_argument("training gamma differs from the shaping gamma");
  }
  SessionResult out;
  out.session = session;
  out.seed = session_seed(config.seed, session);
  out.q = QTable(env.num_states(), env.num_actions());
  std::mt19937_64 rng(out.seed);

  for (int e = 0; e < config.episodes; ++e) {
    if (config.certify_every > 0 && e > 0 && e % config.certify_every == 0) {
      const auto cert = certify_policy(out.q, env, req, config.certify_horizon);
      if (cert.rollout_high_return) {
        out.stopped_at = e;
        break;
      }
    }
    double epsilon = config.epsilon;
    if (config.epsilon_final && config.episodes > 1) {
      epsilon += (*config.epsilon_final - config.epsilon) * e / (config.episodes - 1);
    }

    EpisodeLog log;
    log.session = session;
    log.episode = e;
    int s = env.reset();
    bool prev_in = env.in_goal();
    double discount = 1.0;
    for (int k = 1; k <= config.steps; ++k) {
      const int a = epsilon_greedy_action(out.q, s, epsilon, rng);
      const StepResult r = env.step(a);
      q_update(out.q, s, a, r.reward, r.next_state, config.alpha, config.gamma);
      log.truncated_return += discount * r.reward;
      discount *= config.gamma;
      if (r.in_goal && !log.entered_goal_at) log.entered_goal_at = k;
      if (prev_in && !r.in_goal && k <= req.permanence_time) log.exited_before_kp = true;
      prev_in = r.in_goal;
      s = r.next_state;
    }
    out.episodes.push_back(log);
  }
  return out;
}

TrainResult train(const EnvFactory& make_env, const TrainConfig& config,
                  const ControlRequirements& req) {
  config.validate();
  TrainResult result;
  result.config = config;
  result.sessions.resize(static_cast<std::size_t>(config.sessions));

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, static_cast<unsigned>(config.sessions));

  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto worker = [&](unsigned w) {
    try {
      for (int i = next++; i < config.sessions; i = next++) {
        auto env = make_env();
        result.sessions[static_cast<std::size_t>(i)] = train_session(*env, config, req, i);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

std::vector<WindowStat> windowed_returns(const TrainResult& result, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  std::size_t longest = 0;
  for (const auto& s : result.sessions) longest = std::max(longest, s.episodes.size());
  std::vector<WindowStat> stats;
  for (std::size_t e = 0; e < longest; ++e) {
    std::vector<double> averages;
    for (const auto& s : result.sessions) {
      if (e >= s.episodes.size()) continue;
      const std::size_t first = e + 1 >= static_cast<std::size_t>(window) ? e + 1 - window : 0;
      double sum = 0.0;
      for (std::size_t i = first; i <= e; ++i) sum += s.episodes[i].truncated_return;
      averages.push_back(sum / static_cast<double>(e - first + 1));
    }
    WindowStat w;
    w.episode = static_cast<int>(e);
    w.sessions = static_cast<int>(averages.size());
    for (double a : averages) w.mean += a;
    w.mean /= static_cast<double>(averages.size());
    for (double a : averages) w.stddev += (a - w.mean) * (a - w.mean);
    w.stddev = std::sqrt(w.stddev / static_cast<double>(averages.size()));
    stats.push_back(w);
  }
  return stats;
}

void write_train_log(std::ostream& out, const TrainResult& result) {
  out << kLogHeader << '\n';
  out << "session,episode,truncated_return,entered_goal_at,exited_before_kp\n";
  for (const auto& s : result.sessions) {
    for (const auto& e : s.episodes) {
      out << e.session << ',' << e.episode << ',' << format_double(e.truncated_return) << ','
          << (e.entered_goal_at ? std::to_string(*e.entered_goal_at) : "") << ','
          << (e.exited_before_kp ? 1 : 0) << '\n';
    }
  }
}

void write_window_stats(std::ostream& out, const std::vector<WindowStat>& stats) {
  out << kWindowHeader << '\n';
  out << "episode,sessions,mean,std\n";
  for (const auto& w : stats) {
    out << w.episode << ',' << w.sessions << ',' << format_double(w.mean) << ','
        << format_double(w.stddev) << '\n';
  }
}

void write_qtable(std::ostream& out, const QTable& q, std::uint64_t seed, std::uint64_t hash) {
  out << kQTableHeader << " states=" << q.num_states() << " actions=" << q.num_actions()
      << " seed=" << seed << " config_hash=" << hash << '\n';
  for (int s = 0; s < q.num_states(); ++s) {
    for (int a = 0; a < q.num_actions(); ++a) {
      out << (a ? " " : "") << format_double(q.value(s, a));
    }
    out << '\n';
  }
  out << "#visits\n";
  for (int s = 0; s < q.num_states(); ++s) {
    for (int a = 0; a < q.num_actions(); ++a) out << (a ? " " : "") << q.visits(s, a);
    out << '\n';
  }
}

QTable read_qtable(std::istream& in, QTableHeader* header) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kQTableHeader, 0) != 0) {
    throw std::invalid_argument("Q-table: missing '" + std::string(kQTableHeader) + "' header");
  }
  QTableHeader h;
  std::istringstream fields(line.substr(std::string(kQTableHeader).size()));
  std::string tok;
  while (fields >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("Q-table header: bad field " + tok);
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "states") h.n_states = std::stoi(val);
    else if (key == "actions") h.n_actions = std::stoi(val);
    else if (key == "seed") h.seed = std::stoull(val);
    else if (key == "config_hash") h.config_hash = std::stoull(val);
    else throw std::invalid_argument("Q-table header: unknown field " + key);
  }
  QTable q(h.n_states, h.n_actions);
  for (int s = 0; s < h.n_states; ++s) {
    for (int a = 0; a < h.n_actions; ++a) {
      if (!(in >> tok)) throw std::invalid_argument("Q-table: truncated value block");
      q.set_value(s, a, std::stod(tok));
    }
  }
  if (!(in >> tok) || tok != "#visits") throw std::invalid_argument("Q-table: missing #visits");
  for (int s = 0; s < h.n_states; ++s) {
    for (int a = 0; a < h.n_actions; ++a) {
      std::uint64_t v = 0;
      if (!(in >> v)) throw std::invalid_argument("Q-table: truncated visit block");
      q.set_visits(s, a, v);
    }
  }
  if (header) *header = h;
  return q;
}

}  // namespace rlguard
