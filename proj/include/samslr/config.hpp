#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace samslr::config {

/// Line-oriented `key = value` configuration. `#` starts a comment,
/// blank lines are skipped, keys are unique.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value);

  /// Keys in insertion order, for digests and round-trip dumps.
  const std::vector<std::string>& keys() const { return order_; }
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace samslr::config
