#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "aris/sim.hpp"

namespace aris {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Minimal key-value tree file: `[section.sub]` headers, `key = value`
/// entries, `#` comments. Values are numbers, quoted strings, booleans,
/// or flat arrays of numbers. Covers what the run config needs while
/// staying hand-editable.
class KvTree {
 public:
  using Value = std::variant<double, std::string, bool, std::vector<double>>;

  static KvTree parse(const std::string& text, const std::string& origin = "");
  static KvTree parse_file(const std::filesystem::path& file);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> array(const std::string& key) const;  // empty if absent

  const std::map<std::string, Value>& values() const { return values_; }

 private:
  std::map<std::string, Value> values_;
  std::string origin_;
};

/// Composite run configuration: simulation, line geometry, detector
/// choice, wire endpoint, log paths.
struct RunConfig {
  SimConfig sim;
  std::string detector_preset = "reference";
  std::uint16_t port = 4840;
  std::string log_dir = "aris-out";

  static RunConfig defaults() { return RunConfig{}; }
  /// Throws ConfigError naming the offending field.
  static RunConfig from_tree(const KvTree& tree);
  static RunConfig load(const std::filesystem::path& file);

  /// Canonical config file body (parse(to_file()) round-trips).
  std::string to_file() const;
};

}  // namespace aris
