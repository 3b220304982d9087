#pragma once

// Experiment configuration: `key = value` lines, `#` starts a comment.
// Values are kept as text and converted on access, so every conversion error
// can point at the line the key came from.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "percolab/errors.hpp"

namespace percolab::cli {

class ConfigError : public ConfigurationError {
  using ConfigurationError::ConfigurationError;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

class Config {
 public:
  Config() = default;
  explicit Config(std::string source) : source_(std::move(source)) {}

  static Config parse(const std::string& text, const std::string& source) {
    Config c(source);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
      if (c.values_.count(key))
        throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      c.set(key, value, lineno);
    }
    return c;
  }

  // A config file, or the "config" object of a result manifest.
  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const std::exception& e) {
        throw ConfigError(path + ": invalid manifest: " + e.what());
      }
      if (!j.contains("config") || !j["config"].is_object()) throw ConfigError(path + ": manifest has no config");
      Config c(path);
      for (auto& [k, v] : j["config"].items()) {
        if (!v.is_string()) throw ConfigError(path + ": config value for '" + k + "' is not a string");
        c.set(k, v.get<std::string>(), 0);
      }
      return c;
    }
    return parse(text, path);
  }

  void set(const std::string& key, const std::string& value, int line = 0) {
    values_[key] = value;
    lines_[key] = line;
  }
  void erase(const std::string& key) {
    values_.erase(key);
    lines_.erase(key);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  const std::string& source() const noexcept { return source_; }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    auto it = lines_.find(key);
    std::string where = source_;
    if (it != lines_.end() && it->second > 0) where += ":" + std::to_string(it->second);
    throw ConfigError(where + ": " + key + ": " + message);
  }

  void require_only(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : values_)
      if (!allowed.count(k)) fail(k, "unknown key for this experiment");
  }

  std::string str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
    return it->second;
  }
  std::string str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }

  std::uint64_t u64(const std::string& key) const { return parse_u64(key, str(key)); }
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? u64(key) : fallback;
  }

  double real(const std::string& key) const { return parse_real(key, str(key)); }
  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(str(key), ',')) out.push_back(parse_real(key, item));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  std::vector<std::string> words(const std::string& key) const {
    auto out = split(str(key), ',');
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(key, "expected true or false");
  }

  // Integer thresholds: "1,2,5", "1..100" (every integer), or
  // "geom:a:b:n" (n geometric points from a to b, rounded, duplicates dropped).
  std::vector<std::uint64_t> thresholds(const std::string& key) const {
    const std::string v = str(key);
    std::vector<std::uint64_t> out;
    if (v.rfind("geom:", 0) == 0) {
      const auto parts = split(v.substr(5), ':');
      if (parts.size() != 3) fail(key, "expected geom:a:b:n");
      const double a = static_cast<double>(parse_u64(key, parts[0]));
      const double b = static_cast<double>(parse_u64(key, parts[1]));
      const auto n = parse_u64(key, parts[2]);
      if (!(a >= 1 && b > a && n >= 2)) fail(key, "need 1 <= a < b and n >= 2");
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto t = static_cast<std::uint64_t>(std::llround(a * std::pow(b / a, static_cast<double>(i) / (n - 1))));
        if (out.empty() || t > out.back()) out.push_back(t);
      }
    } else if (const auto dots = v.find(".."); dots != std::string::npos) {
      const auto a = parse_u64(key, trim(v.substr(0, dots)));
      const auto b = parse_u64(key, trim(v.substr(dots + 2)));
      if (b < a) fail(key, "empty range");
      if (b - a > 10000000) fail(key, "range too long");
      for (auto t = a; t <= b; ++t) out.push_back(t);
    } else {
      for (const auto& item : split(v, ',')) out.push_back(parse_u64(key, item));
      for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] <= out[i - 1]) fail(key, "thresholds must be strictly increasing");
    }
    if (out.empty()) fail(key, "no thresholds");
    return out;
  }

 private:
  std::uint64_t parse_u64(const std::string& key, const std::string& text) const {
    // Accepts plain integers and integral scientific forms such as 1e6.
    try {
      std::size_t used = 0;
      if (text.find_first_of("eE.") != std::string::npos) {
        const double d = std::stod(text, &used);
        if (used != text.size() || d < 0 || d != std::floor(d) || d > 1.8e19) throw std::invalid_argument(text);
        return static_cast<std::uint64_t>(d);
      }
      if (!text.empty() && text[0] == '-') throw std::invalid_argument(text);
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      fail(key, "expected a nonnegative integer, got '" + text + "'");
    }
  }

  double parse_real(const std::string& key, const std::string& text) const {
    try {
      std::size_t used = 0;
      const double d = std::stod(text, &used);
      if (used != text.size() || !std::isfinite(d)) throw std::invalid_argument(text);
      return d;
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + text + "'");
    }
  }

  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
};

}  // namespace percolab::cli
