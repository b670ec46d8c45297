#include "rlguard/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "rlguard/acceptability.hpp"
#include "rlguard/oracle.hpp"

namespace rlguard {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string> kConfigKeys{
    "env",   "theta",  "gamma",       "k_s",       "k_p",          "k_z",      "sigma",
    "r_c_in", "r_c_exit", "U_out",    "U_in",      "L_out",        "L_in",     "chain_states",
    "chain_goal", "sessions", "episodes", "steps", "alpha",        "epsilon",  "epsilon_final",
    "seed",  "certify_every", "certify_horizon", "threads", "out"};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int to_int(long long v, const char* key) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(std::string("key '") + key + "' out of range");
  }
  return static_cast<int>(v);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path.string());
  return f;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
}

json certificate_json(const ShapingCertificate& c) {
  auto item = [](const Inequality& q) { return json{{"ok", q.ok}, {"slack", q.slack}, {"strict", q.strict}}; };
  json j{{"reward_structure", item(c.reward_structure)},
         {"sigma", item(c.sigma)},
         {"c_in_upper", item(c.c_in_upper)},
         {"c_exit", item(c.c_exit)},
         {"existence", item(c.existence)},
         {"existence_necessary", item(c.existence_necessary)}};
  if (c.k_z) j["k_z"] = item(*c.k_z);
  j["all_ok"] = c.all_ok();
  return j;
}

void print_certificate(std::ostream& out, const ShapingCertificate& c) {
  auto line = [&](const char* name, const Inequality& q) {
    out << "# " << name << ' ' << (q.ok ? "ok" : "FAIL") << " slack=" << format_double(q.slack)
        << '\n';
  };
  line("reward_structure", c.reward_structure);
  line("sigma", c.sigma);
  line("c_in_upper", c.c_in_upper);
  line("c_exit", c.c_exit);
  line("existence", c.existence);
  line("existence_necessary", c.existence_necessary);
  if (c.k_z) line("k_z", *c.k_z);
}

ShapingRecord record_of(const ExperimentConfig& cfg, const ShapingParams& p) {
  ShapingRecord r;
  r.bounds = cfg.reward_bounds();
  r.settling_time = cfg.settling_time;
  r.permanence_time = cfg.permanence_time;
  r.k_z = cfg.k_z;
  r.params = p;
  return r;
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> sessions, episodes, steps, k_z;
};

ExperimentConfig load_experiment(const Common& common) {
  ExperimentConfig cfg = common.config_path.empty()
                             ? ExperimentConfig::defaults("pendulum")
                             : ExperimentConfig::from_config(KeyValueConfig::load(common.config_path));
  if (common.seed) cfg.train.seed = *common.seed;
  if (common.out) cfg.out = *common.out;
  if (common.sessions) cfg.train.sessions = *common.sessions;
  if (common.episodes) cfg.train.episodes = *common.episodes;
  if (common.steps) cfg.train.steps = *common.steps;
  if (common.k_z) cfg.k_z = *common.k_z;
  try {
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

int cmd_shape(const ExperimentConfig& cfg, bool write_file, std::ostream& out) {
  const ShapingResult r = shape_experiment(cfg);
  to_config(record_of(cfg, r.params)).write(out);
  out << "# sigma_lower_bound " << format_double(r.sigma_bound) << '\n';
  print_certificate(out, r.certificate);
  if (write_file) {
    prepare_dir(cfg.out);
    auto f = open_output(fs::path(cfg.out) / "shaping.cfg");
    to_config(record_of(cfg, r.params)).write(f);
  }
  return r.certificate.all_ok() ? kExitOk : kExitFailure;
}

int cmd_check(const ExperimentConfig& cfg, std::ostream& out) {
  if (!cfg.sigma || !cfg.r_c_in || !cfg.r_c_exit) {
    throw ConfigError("check needs sigma, r_c_in and r_c_exit in the config");
  }
  const ShapingParams p{cfg.gamma, *cfg.sigma, *cfg.r_c_in, *cfg.r_c_exit};
  const auto c = check_assumptions(cfg.reward_bounds(), cfg.settling_time, cfg.permanence_time, p,
                                   cfg.k_z);
  print_certificate(out, c);
  out << (c.all_ok() ? "all assumptions hold\n" : "assumption check failed\n");
  return c.all_ok() ? kExitOk : kExitFailure;
}

json certification_json(const CertificationResult& c) {
  json j{{"q_max_at_x0", c.q_max_at_x0},
         {"sigma", c.sigma},
         {"certified", c.certified},
         {"rollout_high_return", c.rollout_high_return},
         {"high_return", to_string(c.high_return)},
         {"return_lo", c.validation_return.lo},
         {"return_hi", c.validation_return.hi},
         {"sign_condition", c.condition_checked}};
  j["verdict"] = c.verdict ? json::parse(verdict_to_json(*c.verdict)) : json(nullptr);
  return j;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.env == "bounds") throw UsageError("env = bounds has no dynamics to train on");
  const ShapingResult shaped = shape_experiment(cfg);
  const auto req = cfg.requirements();
  const auto factory = environment_factory(cfg, shaped.params);
  prepare_dir(cfg.out);
  const std::uint64_t before = soundness_violations();

  const TrainResult result = train(factory, cfg.train, req);
  const auto stats = windowed_returns(result);
  const std::uint64_t hash = config_hash(cfg.train);
  const fs::path dir(cfg.out);
  {
    auto f = open_output(dir / "train_log.csv");
    write_train_log(f, result);
  }
  {
    auto f = open_output(dir / "returns_window.csv");
    write_window_stats(f, stats);
  }
  json sessions = json::array();
  int acceptable = 0;
  for (const auto& s : result.sessions) {
    auto f = open_output(dir / ("qtable_session_" + std::to_string(s.session) + ".txt"));
    write_qtable(f, s.q, s.seed, hash);
    auto env = factory();
    const auto cert = certify_policy(s.q, *env, req, cfg.train.certify_horizon);
    const bool ok = cert.verdict && cert.verdict->acceptable;
    acceptable += ok ? 1 : 0;
    sessions.push_back({{"session", s.session},
                        {"seed", s.seed},
                        {"episodes_run", s.episodes.size()},
                        {"stopped_at", s.stopped_at ? json(*s.stopped_at) : json(nullptr)},
                        {"greedy", certification_json(cert)}});
    out << "session " << s.session << ": episodes " << s.episodes.size() << ", greedy "
        << (ok ? "acceptable" : "not acceptable") << ", return in ["
        << format_double(cert.validation_return.lo) << ", "
        << format_double(cert.validation_return.hi) << "]\n";
  }
  const std::uint64_t violations = soundness_violations() - before;
  json summary{{"config", cfg.to_config().entries()},
               {"params", {{"gamma", shaped.params.gamma},
                           {"sigma", shaped.params.sigma},
                           {"r_c_in", shaped.params.r_c_in},
                           {"r_c_exit", shaped.params.r_c_exit}}},
               {"certificate", certificate_json(shaped.certificate)},
               {"config_hash", hash},
               {"sessions", sessions},
               {"acceptable_sessions", acceptable},
               {"soundness_violations", violations}};
  if (!stats.empty()) {
    summary["final_window"] = {{"episode", stats.back().episode},
                               {"mean", stats.back().mean},
                               {"std", stats.back().stddev}};
  }
  {
    auto f = open_output(dir / "summary.json");
    f << summary.dump(2) << '\n';
  }
  out << "acceptable greedy policies: " << acceptable << '/' << result.sessions.size() << '\n';
  return violations == 0 ? kExitOk : kExitFailure;
}

int cmd_eval(const ExperimentConfig& cfg, std::vector<std::string> tables, std::ostream& out) {
  if (cfg.env == "bounds") throw UsageError("env = bounds has no dynamics to evaluate");
  const ShapingResult shaped = shape_experiment(cfg);
  const auto req = cfg.requirements();
  const auto factory = environment_factory(cfg, shaped.params);
  const fs::path dir(cfg.out);
  if (tables.empty()) {
    for (int i = 0; i < cfg.train.sessions; ++i) {
      tables.push_back((dir / ("qtable_session_" + std::to_string(i) + ".txt")).string());
    }
  }
  prepare_dir(dir);
  const std::uint64_t before = soundness_violations();
  int acceptable = 0, certified = 0;
  json reports = json::array();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    std::ifstream in(tables[i]);
    if (!in) throw UsageError("cannot read Q-table " + tables[i]);
    QTable q;
    try {
      q = read_qtable(in);
    } catch (const std::invalid_argument& e) {
      throw UsageError(tables[i] + ": " + e.what());
    }
    auto env = factory();
    if (q.num_states() != env->num_states() || q.num_actions() != env->num_actions()) {
      throw UsageError(tables[i] + ": table is " + std::to_string(q.num_states()) + "x" +
                       std::to_string(q.num_actions()) + ", environment needs " +
                       std::to_string(env->num_states()) + "x" + std::to_string(env->num_actions()));
    }
    const auto cert = certify_policy(q, *env, req, cfg.train.certify_horizon);
    const bool ok = cert.verdict && cert.verdict->acceptable;
    acceptable += ok ? 1 : 0;
    certified += cert.certified ? 1 : 0;

    {
      auto f = open_output(dir / ("trajectory_session_" + std::to_string(i) + ".csv"));
      write_sequence(f, cert.rollout);
    }
    {
      auto f = open_output(dir / ("distance_session_" + std::to_string(i) + ".csv"));
      f << "# rlguard-distance v1\nk,distance\n";
      const auto& prefix = cert.rollout.prefix();
      for (std::size_t k = 0; k < prefix.size(); ++k) {
        double s = 0.0;
        for (double x : prefix[k].state) s += x * x;
        f << k << ',' << format_double(std::sqrt(s)) << '\n';
      }
    }
    json r = certification_json(cert);
    r["table"] = tables[i];
    reports.push_back(r);
    out << tables[i] << ": " << (cert.certified ? "certified" : "not certified") << ", "
        << (ok ? "acceptable" : "not acceptable");
    if (cert.verdict && cert.verdict->entered_at) out << ", enters G at k=" << *cert.verdict->entered_at;
    out << '\n';
  }
  const std::uint64_t violations = soundness_violations() - before;
  json report{{"tables", reports},
              {"acceptable", acceptable},
              {"certified", certified},
              {"total", tables.size()},
              {"soundness_violations", violations}};
  {
    auto f = open_output(dir / "eval_report.json");
    f << report.dump(2) << '\n';
  }
  out << "acceptable " << acceptable << '/' << tables.size() << ", certified " << certified << '/'
      << tables.size() << '\n';
  const bool all_ok = violations == 0 && acceptable == static_cast<int>(tables.size());
  return all_ok ? kExitOk : kExitFailure;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, std::ostream& out) {
  const auto& names = suite_names();
  if (suite.empty() || std::find(names.begin(), names.end(), suite) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("--suite must be one of: " + list);
  }
  const auto reports = run_suite(suite, seed);
  json all = json::array();
  bool ok = true;
  for (const auto& r : reports) {
    all.push_back(r.to_json());
    ok = ok && r.as_expected();
  }
  out << all.dump(2) << '\n';
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(const std::string& env) {
  ExperimentConfig c;
  c.env = env;
  if (env == "pendulum") {
    c.sigma = 10000.0;
    c.train.certify_every = 10;
  } else if (env == "chain") {
    c.gamma = 0.9;
    c.train.gamma = 0.9;
    c.settling_time = 1;
    c.permanence_time = 5;
    c.train.episodes = 200;
    c.train.steps = 20;
    c.train.certify_horizon = 200;
  } else if (env == "bounds") {
    c.bounds = {0.0, 0.0, 0.0, 0.0};
  } else {
    throw ConfigError("env must be pendulum, bounds or chain, got '" + env + "'");
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& kv) {
  kv.reject_unknown(kConfigKeys);
  ExperimentConfig c = defaults(kv.find_string("env").value_or("pendulum"));
  if (auto v = kv.find_double("theta")) c.theta = *v;
  if (auto v = kv.find_double("gamma")) c.gamma = *v;
  if (auto v = kv.find_int("k_s")) c.settling_time = to_int(*v, "k_s");
  if (auto v = kv.find_int("k_p")) c.permanence_time = to_int(*v, "k_p");
  if (auto v = kv.find_int("k_z")) c.k_z = to_int(*v, "k_z");
  if (auto v = kv.find_double("sigma")) c.sigma = *v;
  if (auto v = kv.find_double("r_c_in")) c.r_c_in = *v;
  if (auto v = kv.find_double("r_c_exit")) c.r_c_exit = *v;
  if (auto v = kv.find_double("U_out")) c.bounds.upper_out = *v;
  if (auto v = kv.find_double("U_in")) c.bounds.upper_in = *v;
  if (auto v = kv.find_double("L_out")) c.bounds.lower_out = *v;
  if (auto v = kv.find_double("L_in")) c.bounds.lower_in = *v;
  if (auto v = kv.find_int("chain_states")) c.chain_states = to_int(*v, "chain_states");
  if (auto v = kv.find_int("chain_goal")) c.chain_goal = to_int(*v, "chain_goal");
  if (auto v = kv.find_int("sessions")) c.train.sessions = to_int(*v, "sessions");
  if (auto v = kv.find_int("episodes")) c.train.episodes = to_int(*v, "episodes");
  if (auto v = kv.find_int("steps")) c.train.steps = to_int(*v, "steps");
  if (auto v = kv.find_double("alpha")) c.train.alpha = *v;
  if (auto v = kv.find_double("epsilon")) c.train.epsilon = *v;
  if (auto v = kv.find_double("epsilon_final")) c.train.epsilon_final = *v;
  if (auto v = kv.find_int("seed")) {
    if (*v < 0) throw ConfigError("seed must be >= 0");
    c.train.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = kv.find_int("certify_every")) c.train.certify_every = to_int(*v, "certify_every");
  if (auto v = kv.find_int("certify_horizon")) c.train.certify_horizon = *v;
  if (auto v = kv.find_int("threads")) c.train.threads = to_int(*v, "threads");
  if (auto v = kv.find_string("out")) c.out = *v;
  c.train.gamma = c.gamma;

  if (c.settling_time < 1 || c.permanence_time < 1) throw ConfigError("k_s and k_p must be >= 1");
  if (c.k_z && (*c.k_z < 1 || *c.k_z > c.settling_time)) {
    throw ConfigError("k_z must satisfy 1 <= k_z <= k_s");
  }
  if (c.env == "chain" && (c.chain_states < 2 || c.chain_states > FiniteMDP::kMaxStates ||
                           c.chain_goal < 1 || c.chain_goal >= c.chain_states)) {
    throw ConfigError("chain needs 2 <= chain_states <= 12 and 1 <= chain_goal < chain_states");
  }
  if (c.env == "pendulum" && !(c.theta > 0.0 && c.theta <= 3.141592653589793)) {
    throw ConfigError("theta must lie in (0, pi]");
  }
  try {
    c.bounds.validate();
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

KeyValueConfig ExperimentConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("env", env);
  kv.set("gamma", gamma);
  kv.set("k_s", static_cast<long long>(settling_time));
  kv.set("k_p", static_cast<long long>(permanence_time));
  if (k_z) kv.set("k_z", static_cast<long long>(*k_z));
  if (sigma) kv.set("sigma", *sigma);
  if (r_c_in) kv.set("r_c_in", *r_c_in);
  if (r_c_exit) kv.set("r_c_exit", *r_c_exit);
  if (env == "pendulum") kv.set("theta", theta);
  if (env == "bounds") {
    kv.set("U_out", bounds.upper_out);
    kv.set("U_in", bounds.upper_in);
    kv.set("L_out", bounds.lower_out);
    kv.set("L_in", bounds.lower_in);
  }
  if (env == "chain") {
    kv.set("chain_states", static_cast<long long>(chain_states));
    kv.set("chain_goal", static_cast<long long>(chain_goal));
  }
  kv.set("sessions", static_cast<long long>(train.sessions));
  kv.set("episodes", static_cast<long long>(train.episodes));
  kv.set("steps", static_cast<long long>(train.steps));
  kv.set("alpha", train.alpha);
  kv.set("epsilon", train.epsilon);
  if (train.epsilon_final) kv.set("epsilon_final", *train.epsilon_final);
  kv.set("seed", std::to_string(train.seed));
  kv.set("certify_every", static_cast<long long>(train.certify_every));
  kv.set("certify_horizon", static_cast<long long>(train.certify_horizon));
  kv.set("threads", static_cast<long long>(train.threads));
  kv.set("out", out);
  return kv;
}

ControlRequirements ExperimentConfig::requirements() const {
  if (env == "pendulum") return {pendulum_goal(theta), settling_time, permanence_time};
  if (env == "chain") {
    const int g = chain_goal;
    auto goal = GoalRegion::from_predicate([g](StateView x) { return x[0] >= g; },
                                           {static_cast<double>(g)},
                                           [g](StateView x) { return std::max(0.0, g - x[0]); });
    return {std::move(goal), settling_time, permanence_time};
  }
  return {GoalRegion::from_predicate([](StateView) { return true; }, {0.0}), settling_time,
          permanence_time};
}

FiniteMDP ExperimentConfig::chain() const {
  std::vector<bool> goal(static_cast<std::size_t>(chain_states), false);
  for (int s = chain_goal; s < chain_states; ++s) goal[static_cast<std::size_t>(s)] = true;
  FiniteMDP m = FiniteMDP::chain(chain_states, goal);
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      m.base_reward[static_cast<std::size_t>(s * m.n_actions + a)] =
          m.goal[static_cast<std::size_t>(m.next(s, a))] ? 0.0 : -1.0;
    }
  }
  return m;
}

RewardBounds ExperimentConfig::reward_bounds() const {
  if (env == "pendulum") return pendulum_reward_bounds(theta);
  if (env == "chain") {
    const FiniteMDP m = chain();
    std::vector<RewardSample> samples;
    for (int s = 0; s < m.n_states; ++s) {
      for (int a = 0; a < m.n_actions; ++a) {
        samples.push_back({m.reward(s, a), m.goal[static_cast<std::size_t>(m.next(s, a))]});
      }
    }
    return derive_bounds(std::span<const RewardSample>(samples));
  }
  return derive_bounds(bounds);
}

ShapingResult shape_experiment(const ExperimentConfig& cfg) {
  IntervalRule rule;
  rule.sigma = cfg.sigma;
  const auto req = cfg.requirements();
  const auto bounds = cfg.reward_bounds();
  return cfg.k_z ? shape_advanced(bounds, req, cfg.gamma, *cfg.k_z, rule)
                 : shape(bounds, req, cfg.gamma, rule);
}

EnvFactory environment_factory(const ExperimentConfig& cfg, const ShapingParams& params) {
  if (cfg.env == "pendulum") {
    PendulumOptions opts;
    opts.theta = cfg.theta;
    return [opts, params] { return std::make_unique<PendulumEnv>(opts, params); };
  }
  if (cfg.env == "chain") {
    const FiniteMDP m = cfg.chain();
    return [m, params] { return std::make_unique<FiniteMdpEnv>(m, params); };
  }
  throw UsageError("env '" + cfg.env + "' has no dynamics");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reward shaping with settling-time guarantees and tabular Q-learning", "rlguard"};
  app.fallthrough();
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "Experiment config (key = value)");
  app.add_option("--seed", common.seed, "Base random seed");
  app.add_option("--out", common.out, "Output directory");
  app.add_option("-S,--sessions", common.sessions, "Training sessions");
  app.add_option("-E,--episodes", common.episodes, "Episodes per session");
  app.add_option("-N,--steps", common.steps, "Steps per episode");
  app.add_option("--kz", common.k_z, "Use advanced shaping with this k_z");

  auto* shape_cmd = app.add_subcommand("shape", "Derive shaping parameters and certify them");
  bool write_file = false;
  shape_cmd->add_flag("--write", write_file, "Also write <out>/shaping.cfg");
  app.add_subcommand("check", "Check given parameters against every assumption");
  app.add_subcommand("train", "Run Q-learning sessions and write logs and tables");
  auto* eval_cmd = app.add_subcommand("eval", "Certify greedy policies of saved Q-tables");
  std::vector<std::string> tables;
  eval_cmd->add_option("tables", tables, "Q-table files (default: <out>/qtable_session_<i>.txt)");
  auto* verify_cmd = app.add_subcommand("verify", "Run brute-force property suites");
  std::string suite;
  verify_cmd->add_option("--suite", suite, "Suite name")->required();

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (verify_cmd->parsed()) return cmd_verify(suite, common.seed.value_or(0), out);
    const ExperimentConfig cfg = load_experiment(common);
    if (shape_cmd->parsed()) return cmd_shape(cfg, write_file, out);
    if (app.got_subcommand("check")) return cmd_check(cfg, out);
    if (app.got_subcommand("train")) return cmd_train(cfg, out);
    if (eval_cmd->parsed()) return cmd_eval(cfg, tables, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ShapingError& e) {
    err << "shaping failed: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rlguard
