#include "rlguard/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace rlguard {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (cfg.entries_.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.entries_.emplace(std::move(key), std::move(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in);
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto v = find_string(key);
  if (!v) throw ConfigError("missing key '" + key + "'");
  return *v;
}

double KeyValueConfig::get_double(const std::string& key) const {
  auto v = find_double(key);
  if (!v) throw ConfigError("missing key '" + key + "'");
  return *v;
}

long long KeyValueConfig::get_int(const std::string& key) const {
  auto v = find_int(key);
  if (!v) throw ConfigError("missing key '" + key + "'");
  return *v;
}

std::optional<std::string> KeyValueConfig::find_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> KeyValueConfig::find_double(const std::string& key) const {
  auto s = find_string(key);
  if (!s) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s->c_str(), &end);
  if (s->empty() || end != s->c_str() + s->size()) {
    throw ConfigError("key '" + key + "': '" + *s + "' is not a number");
  }
  return v;
}

std::optional<long long> KeyValueConfig::find_int(const std::string& key) const {
  auto s = find_string(key);
  if (!s) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || ptr != s->data() + s->size()) {
    throw ConfigError("key '" + key + "': '" + *s + "' is not an integer");
  }
  return v;
}

void KeyValueConfig::reject_unknown(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : entries_) {
    bool known = false;
    for (const auto& a : allowed) known = known || a == key;
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
}

void KeyValueConfig::write(std::ostream& out) const {
  for (const auto& [key, value] : entries_) out << key << " = " << value << '\n';
}

KeyValueConfig to_config(const ShapingRecord& r) {
  KeyValueConfig c;
  c.set("gamma", r.params.gamma);
  c.set("sigma", r.params.sigma);
  c.set("r_c_in", r.params.r_c_in);
  c.set("r_c_exit", r.params.r_c_exit);
  c.set("k_s", static_cast<long long>(r.settling_time));
  c.set("k_p", static_cast<long long>(r.permanence_time));
  if (r.k_z) c.set("k_z", static_cast<long long>(*r.k_z));
  c.set("U_out", r.bounds.upper_out);
  c.set("U_in", r.bounds.upper_in);
  c.set("L_out", r.bounds.lower_out);
  c.set("L_in", r.bounds.lower_in);
  return c;
}

ShapingRecord shaping_record_from_config(const KeyValueConfig& c) {
  c.reject_unknown({"gamma", "sigma", "r_c_in", "r_c_exit", "k_s", "k_p", "k_z", "U_out", "U_in",
                    "L_out", "L_in"});
  ShapingRecord r;
  r.params.gamma = c.get_double("gamma");
  r.params.sigma = c.get_double("sigma");
  r.params.r_c_in = c.get_double("r_c_in");
  r.params.r_c_exit = c.get_double("r_c_exit");
  r.settling_time = static_cast<int>(c.get_int("k_s"));
  r.permanence_time = static_cast<int>(c.get_int("k_p"));
  if (auto kz = c.find_int("k_z")) r.k_z = static_cast<int>(*kz);
  r.bounds = {c.get_double("U_out"), c.get_double("U_in"), c.get_double("L_out"),
              c.get_double("L_in")};
  return r;
}

}  // namespace rlguard
