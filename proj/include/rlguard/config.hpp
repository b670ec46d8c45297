#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rlguard/shaping.hpp"

namespace rlguard {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that round-trips a double (17 significant digits).
std::string format_double(double v);

/// Flat `key = value` text config. '#' starts a comment; blank lines are ignored;
/// duplicate keys are an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
  void set(const std::string& key, double value) { entries_[key] = format_double(value); }
  void set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;

  std::optional<std::string> find_string(const std::string& key) const;
  std::optional<double> find_double(const std::string& key) const;
  std::optional<long long> find_int(const std::string& key) const;

  /// Throws ConfigError naming the first key not in `allowed`.
  void reject_unknown(const std::vector<std::string>& allowed) const;

  void write(std::ostream& out) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Bounds, horizons and designed parameters as one serializable record.
/// Keys: gamma, sigma, r_c_in, r_c_exit, k_s, k_p, k_z, U_out, U_in, L_out, L_in.
struct ShapingRecord {
  RewardBounds bounds;
  int settling_time = 1;
  int permanence_time = 1;
  std::optional<int> k_z;
  ShapingParams params;
};

KeyValueConfig to_config(const ShapingRecord& record);
ShapingRecord shaping_record_from_config(const KeyValueConfig& config);

}  // namespace rlguard
