#pragma once
// JSON configuration handling: loading, strict schema validation (every key
// must be known; required keys must be present) and typed access with
// errors that always name the offending dotted key path.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace spinroute {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  return j;
}

// Flatten a JSON object into dotted leaf paths. Arrays and scalars are
// leaves; objects are descended into.
inline void flatten_json(const json& j, const std::string& prefix,
                         std::map<std::string, json>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string path =
        prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object())
      flatten_json(it.value(), path, out);
    else
      out[path] = it.value();
  }
}

// Strictly validated view over one scenario config.
class ConfigView {
 public:
  ConfigView(const json& j, std::string origin)
      : origin_(std::move(origin)) {
    flatten_json(j, "", leaves_);
  }

  // Every present leaf must be an allowed key; every required key present.
  void check_keys(const std::vector<std::string>& allowed,
                  const std::vector<std::string>& required) const {
    const std::set<std::string> allowed_set(allowed.begin(), allowed.end());
    for (const auto& [path, value] : leaves_)
      if (!allowed_set.count(path))
        throw ConfigError(origin_ + ": unknown key '" + path + "'");
    for (const auto& key : required)
      if (!leaves_.count(key))
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
  }

  bool has(const std::string& key) const { return leaves_.count(key) != 0; }

  double number(const std::string& key) const {
    const json& v = leaf(key);
    if (!v.is_number())
      throw ConfigError(origin_ + ": key '" + key + "' must be a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) const {
    const json& v = leaf(key);
    if (!v.is_number_integer())
      throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
    return v.get<int>();
  }
  int integer_or(const std::string& key, int fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = leaf(key);
    if (!v.is_boolean())
      throw ConfigError(origin_ + ": key '" + key + "' must be a boolean");
    return v.get<bool>();
  }

  std::string text(const std::string& key) const {
    const json& v = leaf(key);
    if (!v.is_string())
      throw ConfigError(origin_ + ": key '" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string text_or(const std::string& key,
                      const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  std::vector<double> number_array(const std::string& key,
                                   std::size_t expected_size) const {
    const json& v = leaf(key);
    if (!v.is_array() || v.size() != expected_size)
      throw ConfigError(origin_ + ": key '" + key + "' must be an array of " +
                        std::to_string(expected_size) + " numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number())
        throw ConfigError(origin_ + ": key '" + key +
                          "' must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  // Positive / range helpers so scenario code can stay terse.
  double positive(const std::string& key) const {
    const double v = number(key);
    if (!(v > 0.0))
      throw ConfigError(origin_ + ": key '" + key + "' must be > 0");
    return v;
  }
  double positive_or(const std::string& key, double fallback) const {
    return has(key) ? positive(key) : fallback;
  }
  int integer_in(const std::string& key, int lo, int hi) const {
    const int v = integer(key);
    if (v < lo || v > hi)
      throw ConfigError(origin_ + ": key '" + key + "' must be in [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  const std::string& origin() const { return origin_; }
  const std::map<std::string, json>& leaves() const { return leaves_; }

 private:
  const json& leaf(const std::string& key) const {
    auto it = leaves_.find(key);
    if (it == leaves_.end())
      throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return it->second;
  }

  std::string origin_;
  std::map<std::string, json> leaves_;
};

}  // namespace spinroute
