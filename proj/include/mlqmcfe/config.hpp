#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mlqmcfe {

// Flat key=value experiment configuration. '#' starts a comment; unknown keys
// are rejected with their line number; every run record embeds the resolved
// config with defaults materialized.
class Config {
 public:
  static Config defaults();
  static Config from_string(const std::string& text, const std::string& origin = "<string>");
  static Config from_file(const std::string& path);

  bool has(const std::string& key) const;       // key registered
  bool is_auto(const std::string& key) const;   // value is the sentinel "auto"
  const std::string& raw(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::vector<long long> int_list(const std::string& key) const;  // comma separated

  void set(const std::string& key, const std::string& value);

  std::string resolved() const;  // canonical sorted key=value lines
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mlqmcfe
