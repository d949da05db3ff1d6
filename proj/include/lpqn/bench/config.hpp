#pragma once

// Experiment configuration: a flat `key = value` document. Lines starting with
// '#' are comments; list values are comma-separated.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpqn/scalar_core.hpp"

namespace lpqn::bench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

class Config {
 public:
  Config() = default;

  static Config parse(std::istream& in) {
    Config c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
      if (c.values_.count(key) != 0) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      c.values_[key] = value;
      c.order_.push_back(key);
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    return parse(f);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (values_.count(key) == 0) order_.push_back(key);
    values_[key] = value;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require_string(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(key, require_string(key)) : (used_.insert(key), fallback);
  }

  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? to_int(key, require_string(key)) : (used_.insert(key), fallback);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string v = require_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
  }

  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split(require_string(key))) out.push_back(to_double(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  std::vector<long long> get_ints(const std::string& key, const std::vector<long long>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<long long> out;
    for (const auto& item : split(require_string(key))) out.push_back(to_int(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    auto out = split(require_string(key));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
  }

  /// Exponent written as "s/q" (e.g. 1/2).
  RationalExponent get_exponent(const std::string& key, RationalExponent fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string v = require_string(key);
    const auto slash = v.find('/');
    if (slash == std::string::npos) throw ConfigError("key '" + key + "': expected s/q, got '" + v + "'");
    try {
      return RationalExponent(static_cast<int>(to_int(key, trim(v.substr(0, slash)))),
                              static_cast<int>(to_int(key, trim(v.substr(slash + 1)))));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  }

  /// Keys present in the file that no getter asked for.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& k : order_)
      if (used_.count(k) == 0) out.push_back(k);
    return out;
  }

  const std::vector<std::string>& keys() const { return order_; }
  const std::string& raw(const std::string& key) const { return values_.at(key); }

 private:
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
    return out;
  }

  static long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
      throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
    return out;
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  mutable std::set<std::string> used_;
};

}  // namespace lpqn::bench
