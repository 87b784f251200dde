#pragma once

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geoground/error.hpp"
#include "geoground/lexicon.hpp"

namespace geoground {

inline constexpr std::string_view kEnvPrefix = "GEOGROUND_";

struct Config {
  int grid_rows = 3;
  int grid_cols = 3;
  int default_zoom = 15;
  double search_radius_m = 10000.0;
  double identify_radius_m = 1000.0;
  int retrieval_k = 20;
  int answer_top_m = 3;
  double arrival_radius_m = 15.0;
  int max_steps = 8;
  double session_ttl_s = 1800.0;
  std::string api_key;
  std::string ranker_model_path;
  int ranker_trees = 100;
  int ranker_max_depth = 3;
  double ranker_learning_rate = 0.1;
  std::uint64_t ranker_seed = 7;
  int embedding_dim = 512;
  std::uint64_t embedding_seed = 0;
  std::string lexicon_path;
  double scene_x_fraction = 0.05;
  double scene_y_fraction = 0.05;
  double scene_depth_m = 0.5;
  bool deterministic_trace_clock = false;
};

namespace detail {

struct ConfigKey {
  std::string_view key;
  std::function<void(Config&, const std::string&)> set;
};

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "config key " + key + " expects a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    fail(ErrorCode::InvalidArgument, "config key " + key + " expects an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const auto l = to_lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  fail(ErrorCode::InvalidArgument, "config key " + key + " expects a boolean, got '" + v + "'");
}

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"grid.rows", [](Config& c, const std::string& v) { c.grid_rows = static_cast<int>(to_int("grid.rows", v)); }},
      {"grid.cols", [](Config& c, const std::string& v) { c.grid_cols = static_cast<int>(to_int("grid.cols", v)); }},
      {"grid.zoom", [](Config& c, const std::string& v) { c.default_zoom = static_cast<int>(to_int("grid.zoom", v)); }},
      {"retrieval.search_radius_m", [](Config& c, const std::string& v) { c.search_radius_m = to_double("retrieval.search_radius_m", v); }},
      {"retrieval.identify_radius_m", [](Config& c, const std::string& v) { c.identify_radius_m = to_double("retrieval.identify_radius_m", v); }},
      {"retrieval.k", [](Config& c, const std::string& v) { c.retrieval_k = static_cast<int>(to_int("retrieval.k", v)); }},
      {"answer.top_m", [](Config& c, const std::string& v) { c.answer_top_m = static_cast<int>(to_int("answer.top_m", v)); }},
      {"nav.arrival_radius_m", [](Config& c, const std::string& v) { c.arrival_radius_m = to_double("nav.arrival_radius_m", v); }},
      {"agents.max_steps", [](Config& c, const std::string& v) { c.max_steps = static_cast<int>(to_int("agents.max_steps", v)); }},
      {"agents.deterministic_clock", [](Config& c, const std::string& v) { c.deterministic_trace_clock = to_bool("agents.deterministic_clock", v); }},
      {"session.ttl_s", [](Config& c, const std::string& v) { c.session_ttl_s = to_double("session.ttl_s", v); }},
      {"service.api_key", [](Config& c, const std::string& v) { c.api_key = v; }},
      {"ranker.model_path", [](Config& c, const std::string& v) { c.ranker_model_path = v; }},
      {"ranker.trees", [](Config& c, const std::string& v) { c.ranker_trees = static_cast<int>(to_int("ranker.trees", v)); }},
      {"ranker.max_depth", [](Config& c, const std::string& v) { c.ranker_max_depth = static_cast<int>(to_int("ranker.max_depth", v)); }},
      {"ranker.learning_rate", [](Config& c, const std::string& v) { c.ranker_learning_rate = to_double("ranker.learning_rate", v); }},
      {"ranker.seed", [](Config& c, const std::string& v) { c.ranker_seed = static_cast<std::uint64_t>(to_int("ranker.seed", v)); }},
      {"embedding.dim", [](Config& c, const std::string& v) { c.embedding_dim = static_cast<int>(to_int("embedding.dim", v)); }},
      {"embedding.seed", [](Config& c, const std::string& v) { c.embedding_seed = static_cast<std::uint64_t>(to_int("embedding.seed", v)); }},
      {"lexicon.path", [](Config& c, const std::string& v) { c.lexicon_path = v; }},
      {"scene.x_fraction", [](Config& c, const std::string& v) { c.scene_x_fraction = to_double("scene.x_fraction", v); }},
      {"scene.y_fraction", [](Config& c, const std::string& v) { c.scene_y_fraction = to_double("scene.y_fraction", v); }},
      {"scene.depth_m", [](Config& c, const std::string& v) { c.scene_depth_m = to_double("scene.depth_m", v); }},
  };
  return keys;
}

// grid.rows -> GEOGROUND_GRID_ROWS
inline std::string env_name(std::string_view key) {
  std::string out(kEnvPrefix);
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

inline void set_config_value(Config& c, const std::string& key, const std::string& value) {
  for (const auto& k : detail::config_keys()) {
    if (k.key == key) {
      k.set(c, value);
      return;
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

inline void validate(const Config& c) {
  if (c.grid_rows < 1 || c.grid_cols < 1) fail(ErrorCode::InvalidArgument, "grid shape must be at least 1x1");
  if (c.retrieval_k < 1 || c.answer_top_m < 1 || c.max_steps < 1) fail(ErrorCode::InvalidArgument, "counts must be positive");
  if (!(c.search_radius_m > 0) || !(c.identify_radius_m > 0) || !(c.arrival_radius_m > 0) || !(c.session_ttl_s > 0))
    fail(ErrorCode::InvalidArgument, "radii and TTL must be positive");
  if (c.embedding_dim < 1) fail(ErrorCode::InvalidArgument, "embedding.dim must be positive");
}

// `key = value` lines; '#' comments; blank lines ignored.
inline Config parse_config(std::istream& in, Config c = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + " has no '='");
    set_config_value(c, trim(std::string_view(text).substr(0, eq)), trim(std::string_view(text).substr(eq + 1)));
  }
  return c;
}

inline Config parse_config(std::string_view text, Config c = {}) {
  std::stringstream ss{std::string(text)};
  return parse_config(ss, std::move(c));
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

inline Config apply_env(Config c, const EnvLookup& env = process_env()) {
  for (const auto& k : detail::config_keys())
    if (auto v = env(detail::env_name(k.key))) k.set(c, *v);
  return c;
}

// Defaults, then the file (when given), then GEOGROUND_* variables.
inline Config load_config(const std::optional<std::string>& path, const EnvLookup& env = process_env()) {
  Config c;
  if (path) {
    std::ifstream in(*path);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot open config file " + *path);
    c = parse_config(in, c);
  }
  c = apply_env(std::move(c), env);
  validate(c);
  return c;
}

inline std::vector<std::string> config_key_names() {
  std::vector<std::string> out;
  for (const auto& k : detail::config_keys()) out.emplace_back(k.key);
  return out;
}

}  // namespace geoground
