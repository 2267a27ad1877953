#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` settings. '#' starts a comment, blank lines are
/// ignored, later assignments override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& is, const std::string& origin = "<config>") {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.set(key, trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path + "'");
    return parse(is, path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  std::string require(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
  }
  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    return to_double(key, get(key, ""));
  }
  int get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, fallback);
    if (v != static_cast<double>(static_cast<long long>(v))) throw ConfigError("config key '" + key + "' must be an integer");
    return static_cast<int>(v);
  }
  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string v = get(key, "");
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "' must be a boolean, got '" + v + "'");
  }
  /// Comma- or space-separated list of numbers.
  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    std::string v = get(key, "");
    for (char& c : v) {
      if (c == ',') c = ' ';
    }
    std::istringstream ss(v);
    std::string tok;
    while (ss >> tok) out.push_back(to_double(key, tok));
    return out;
  }

  /// Keys present in the file that were never read; usually typos.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.push_back(k);
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
  static double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) {
      throw ConfigError("config key '" + key + "' must be a number, got '" + v + "'");
    }
    return d;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace mvr
