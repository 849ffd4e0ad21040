#pragma once

// Run configuration: defaults, JSON config files and flag overrides.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <iterator>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "langevin/error.hpp"

namespace langevin {

struct RunConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  std::size_t paths = 100;
  std::uint64_t seed = 0;
  std::string method = "construction";  // construction | sde
  double epsilon = 0.1;
  int k = 1;
  std::string out;                       // output directory
  std::optional<double> tol;             // overrides the gate tolerance
  std::size_t workers = 1;
  double bp_cap = 1e4;                   // B' horizon cap, time units
  bool refine = false;                   // refine impact times in the integrator

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt: must be > 0");
    if (!(t_max > 0.0)) throw ConfigError("t_max: must be > 0");
    if (t_max / dt < 1.0) throw ConfigError("t_max: must be >= dt");
    if (paths < 1) throw ConfigError("paths: must be >= 1");
    if (method != "construction" && method != "sde") {
      throw ConfigError("method: must be construction or sde");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon: must be > 0");
    if (k < 0 || k > 4) throw ConfigError("k: must be in [0, 4]");
    if (tol && !(*tol > 0.0)) throw ConfigError("tol: must be > 0");
    if (workers < 1) throw ConfigError("workers: must be >= 1");
    if (!(bp_cap > 0.0)) throw ConfigError("bp_cap: must be > 0");
  }

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_max / dt)); }
};

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["dt"] = c.dt;
  j["t_max"] = c.t_max;
  j["paths"] = c.paths;
  j["seed"] = c.seed;
  j["method"] = c.method;
  j["epsilon"] = c.epsilon;
  j["k"] = c.k;
  j["out"] = c.out;
  j["tol"] = c.tol ? nlohmann::ordered_json(*c.tol) : nlohmann::ordered_json(nullptr);
  j["workers"] = c.workers;
  j["bp_cap"] = c.bp_cap;
  j["refine"] = c.refine;
  return j;
}

namespace detail {

template <typename T>
T config_value(const nlohmann::json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(key + ": expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key + ": expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key + ": expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.get<long long>() < 0) throw ConfigError(key + ": must be >= 0");
      }
    }
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

}  // namespace detail

// Applies the keys of a JSON object to `cfg`. Unknown keys are rejected.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, v] : j.items()) {
    using detail::config_value;
    if (key == "dt") cfg.dt = config_value<double>(v, key);
    else if (key == "t_max") cfg.t_max = config_value<double>(v, key);
    else if (key == "paths") cfg.paths = config_value<std::size_t>(v, key);
    else if (key == "seed") cfg.seed = config_value<std::uint64_t>(v, key);
    else if (key == "method") cfg.method = config_value<std::string>(v, key);
    else if (key == "epsilon") cfg.epsilon = config_value<double>(v, key);
    else if (key == "k") cfg.k = config_value<int>(v, key);
    else if (key == "out") cfg.out = config_value<std::string>(v, key);
    else if (key == "tol") cfg.tol = v.is_null() ? std::nullopt : std::optional(config_value<double>(v, key));
    else if (key == "workers") cfg.workers = config_value<std::size_t>(v, key);
    else if (key == "bp_cap") cfg.bp_cap = config_value<double>(v, key);
    else if (key == "refine") cfg.refine = config_value<bool>(v, key);
    else throw ConfigError("unknown config key \"" + key + "\"");
  }
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  nlohmann::json j;
  try {
    j = text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  apply_json(cfg, j);
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

// Default output directory: $LANGEVIN_OUT_DIR, else the working directory.
inline std::string default_out_dir() {
  const char* env = std::getenv("LANGEVIN_OUT_DIR");
  return env && *env ? std::string(env) : std::string(".");
}

}  // namespace langevin
