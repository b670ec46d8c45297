// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rlguard/acceptability.hpp"
#include "rlguard/cli.hpp"
#include "rlguard/learn.hpp"
#include "rlguard/oracle.hpp"

using namespace rlguard;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double shape_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + " = ", 0) == 0) return std::stod(line.substr(key.size() + 3));
  }
  return std::nan("");
}

bool within(double v, double ref, double tol) { return std::abs(v - ref) <= tol * std::abs(ref); }

Outcome shaping_constants() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out, err;
  const int code_p = run_cli({"rlguard", "shape"}, out, err);
  const double in_p = shape_value(out.str(), "r_c_in");
  const double exit_p = shape_value(out.str(), "r_c_exit");

  const fs::path dir = fs::path(RLGUARD_TEST_TMP) / "acceptance";
  fs::create_directories(dir);
  const fs::path cfg = dir / "lunar.cfg";
  std::ofstream(cfg) << "env = bounds\nU_out = 100\nU_in = 100\nL_out = -100\nL_in = 100\n"
                        "gamma = 0.99\nk_s = 500\nk_p = 1000\nsigma = 12000\n";
  std::ostringstream out_l;
  const int code_l = run_cli({"rlguard", "--config", cfg.string(), "shape"}, out_l, err);
  const double in_l = shape_value(out_l.str(), "r_c_in");
  const double exit_l = shape_value(out_l.str(), "r_c_exit");
  const double secs = seconds_since(t0);

  Outcome o;
  o.pass = code_p == 0 && code_l == 0 && within(in_p, 1.52e4, 0.02) &&
           within(exit_p, -3.50e10, 0.02) && within(in_l, 3.04e3, 0.02) &&
           within(exit_l, -6.93e9, 0.02) && secs < 1.0;
  o.detail = "pendulum r_c_in=" + fmt("%.6g", in_p) + " r_c_exit=" + fmt("%.6g", exit_p) +
             "; lunar bounds r_c_in=" + fmt("%.6g", in_l) + " r_c_exit=" + fmt("%.6g", exit_l) +
             "; " + fmt("%.3f", secs) + " s";
  return o;
}

Outcome pendulum_study() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = ExperimentConfig::defaults("pendulum");
  cfg.train.sessions = 5;
  cfg.train.episodes = 1000;
  cfg.train.steps = 1000;
  cfg.train.alpha = 0.8;
  cfg.train.epsilon = 0.05;
  const auto shaped = shape_experiment(cfg);
  const auto factory = environment_factory(cfg, shaped.params);
  const auto req = cfg.requirements();
  const TrainResult result = train(factory, cfg.train, req);

  int acceptable = 0, certified = 0;
  std::string per_session;
  for (const auto& s : result.sessions) {
    auto env = factory();
    const auto c = certify_policy(s.q, *env, req, 3000);
    const bool ok = c.verdict && c.verdict->acceptable;
    acceptable += ok ? 1 : 0;
    certified += c.certified ? 1 : 0;
    per_session += " s" + std::to_string(s.session) + ":" + (ok ? "ok" : "fail");
    if (c.verdict && c.verdict->entered_at) per_session += "@" + std::to_string(*c.verdict->entered_at);
  }
  Outcome o;
  o.pass = acceptable >= 4;
  o.detail = std::to_string(acceptable) + "/5 greedy rollouts acceptable, " +
             std::to_string(certified) + "/5 certified;" + per_session + "; " +
             fmt("%.1f", seconds_since(t0)) + " s";
  return o;
}

Outcome property_suites(std::vector<PropertyReport>& reports) {
  const auto t0 = std::chrono::steady_clock::now();
  reports = run_suite("all", 2024);
  const double secs = seconds_since(t0);
  bool ok = true;
  int negatives = 0;
  std::string failed;
  for (const auto& r : reports) {
    if (!r.as_expected()) {
      ok = false;
      failed += " " + r.name;
    }
    if (r.negative_control) ++negatives;
  }
  Outcome o;
  o.pass = ok && negatives == 2 && secs < 120.0;
  o.detail = std::to_string(reports.size()) + " reports (" + std::to_string(negatives) +
             " negative controls), " + fmt("%.1f", secs) + " s" +
             (failed.empty() ? "" : "; unexpected:" + failed);
  return o;
}

Outcome return_oracle() {
  const auto r = verify_exact_tail_returns(1000, 10000, 1e-9, 99);
  Outcome o;
  o.pass = r.passed() && r.trials >= 1000;
  o.detail = std::to_string(r.trials) + " sequences, " + std::to_string(r.counterexample_count) +
             " mismatches above 1e-9";
  return o;
}

Outcome feasibility() {
  const auto goal = GoalRegion::from_predicate([](StateView x) { return x[0] <= 0.0; }, {0.0},
                                               [](StateView x) { return std::max(0.0, x[0]); });
  const State x0{10.0};
  const bool flagged = settling_time_infeasible(3, x0, goal, 3.0);
  const auto min_ks = feasibility_min_settling(x0, goal, 3.0);
  const auto r = verify_feasibility_integrator();
  Outcome o;
  o.pass = flagged && min_ks == 4 && r.passed();
  o.detail = std::string("k_s=3 ") + (flagged ? "flagged infeasible" : "not flagged") +
             ", ceil(10/3)=" + std::to_string(min_ks) + ", " + std::to_string(r.trials) +
             " exhaustive runs, " + std::to_string(r.counterexample_count) + " reach G";
  return o;
}

}  // namespace

int main() {
  std::vector<Outcome> results(6);
  std::vector<PropertyReport> reports;
  try {
    results[0] = shaping_constants();
    results[1] = pendulum_study();
    results[3] = property_suites(reports);
    results[4] = return_oracle();
    results[5] = feasibility();
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance run aborted: " << e.what() << '\n';
    return 1;
  }
  const auto violations = soundness_violations();
  results[2] = {violations == 0,
                std::to_string(violations) + " certified rollouts found unacceptable"};

  const char* names[] = {"shaping constants", "pendulum study", "certification soundness",
                         "property suites", "return oracle", "feasibility bound"};
  bool all = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::cout << (results[i].pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " ("
              << names[i] << "): " << results[i].detail << '\n';
    all = all && results[i].pass;
  }
  return all ? 0 : 1;
}
