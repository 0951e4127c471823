/*
 *    Copyright 2026 The pythia-sim Contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pythia/simulation.hpp"

namespace pythia {

class ConfigError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double parse_real(std::string_view key, std::string_view v)
{
  std::string s(trim(v));
  char* end = nullptr;
  double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + s + "'");
  return d;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v)
{
  v = trim(v);
  Int out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v)
{
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true/false, got '" + std::string(v) + "'");
}

inline std::vector<std::string_view> split_list(std::string_view v)
{
  std::vector<std::string_view> out;
  while (true) {
    auto c = v.find(',');
    auto item = trim(v.substr(0, c));
    if (!item.empty())
      out.push_back(item);
    if (c == std::string_view::npos)
      break;
    v.remove_prefix(c + 1);
  }
  return out;
}

// shortest text that parses back to the same double
inline std::string fmt_real(double d)
{
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, res.ptr);
}

} // namespace detail

inline SimConfig preset_config(std::string_view name)
{
  SimConfig c;
  if (name == "basic")
    return c;
  if (name == "strict") {
    c.agent.rewards = RewardConfig::strict();
    return c;
  }
  if (name == "bw-oblivious" || name == "bandwidth-oblivious") {
    c.agent.rewards = RewardConfig::bandwidth_oblivious();
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "' (expected basic, strict or bw-oblivious)");
}

// Sets one flattened key ("section.key") on `cfg`.
inline void set_config_key(SimConfig& cfg, const std::string& key, std::string_view value)
{
  value = detail::trim(value);
  if (value.empty())
    throw ConfigError("missing value for config key '" + key + "'");

  auto& ag = cfg.agent;
  auto real = [&](double& slot) { slot = detail::parse_real(key, value); };

  if (key == "preset") {
    cfg = preset_config(value);
  } else if (key == "prefetcher") {
    if (value == "pythia")
      cfg.prefetcher = PrefetcherKind::Pythia;
    else if (value == "stride")
      cfg.prefetcher = PrefetcherKind::Stride;
    else if (value == "nextline")
      cfg.prefetcher = PrefetcherKind::NextLine;
    else if (value == "none")
      cfg.prefetcher = PrefetcherKind::None;
    else
      throw ConfigError("config key 'prefetcher': unknown prefetcher '" + std::string(value) + "'");
  } else if (key == "seed") {
    ag.rng_seed = detail::parse_int<std::uint64_t>(key, value);
  } else if (key == "hyperparameters.alpha") {
    real(ag.alpha);
  } else if (key == "hyperparameters.gamma") {
    real(ag.gamma);
  } else if (key == "hyperparameters.epsilon") {
    real(ag.epsilon);
  } else if (key == "rewards.r_at") {
    real(ag.rewards.r_at);
  } else if (key == "rewards.r_al") {
    real(ag.rewards.r_al);
  } else if (key == "rewards.r_cl") {
    real(ag.rewards.r_cl);
  } else if (key == "rewards.r_in_h") {
    real(ag.rewards.r_in_h);
  } else if (key == "rewards.r_in_l") {
    real(ag.rewards.r_in_l);
  } else if (key == "rewards.r_np_h") {
    real(ag.rewards.r_np_h);
  } else if (key == "rewards.r_np_l") {
    real(ag.rewards.r_np_l);
  } else if (key == "features.features") {
    ag.features.clear();
    for (auto f : detail::split_list(value)) {
      try {
        ag.features.push_back(FeatureSpec::parse(f));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
      }
    }
  } else if (key == "features.global_delta") {
    ag.global_delta = detail::parse_bool(key, value);
  } else if (key == "actions.actions") {
    ag.actions.clear();
    for (auto a : detail::split_list(value))
      ag.actions.push_back(detail::parse_int<int>(key, a));
  } else if (key == "qvstore.planes") {
    ag.qvstore.num_planes = detail::parse_int<unsigned>(key, value);
  } else if (key == "qvstore.feature_bins") {
    ag.qvstore.feature_bins = detail::parse_int<unsigned>(key, value);
  } else if (key == "qvstore.shifts") {
    ag.qvstore.shift_constants.clear();
    for (auto s : detail::split_list(value))
      ag.qvstore.shift_constants.push_back(detail::parse_int<unsigned>(key, s));
  } else if (key == "qvstore.hash") {
    if (value == "multiply-shift")
      ag.qvstore.hash = PlaneHash::MultiplyShift;
    else if (value == "identity")
      ag.qvstore.hash = PlaneHash::Identity;
    else
      throw ConfigError("config key 'qvstore.hash': expected multiply-shift or identity");
  } else if (key == "qvstore.update") {
    if (value == "all-vaults")
      ag.qvstore.update_rule = VaultUpdate::AllVaults;
    else if (value == "max-vault")
      ag.qvstore.update_rule = VaultUpdate::MaxVault;
    else
      throw ConfigError("config key 'qvstore.update': expected all-vaults or max-vault");
  } else if (key == "eq.capacity") {
    ag.eq_capacity = detail::parse_int<std::size_t>(key, value);
  } else if (key == "cache.size_bytes") {
    cfg.cache.size_bytes = detail::parse_int<std::uint64_t>(key, value);
  } else if (key == "cache.ways") {
    cfg.cache.ways = detail::parse_int<unsigned>(key, value);
  } else if (key == "cache.fill_latency") {
    cfg.cache.fill_latency_ticks = detail::parse_int<Tick>(key, value);
  } else if (key == "bandwidth.window_ticks") {
    cfg.bandwidth.window_ticks = detail::parse_int<Tick>(key, value);
  } else if (key == "bandwidth.peak_transfers_per_tick") {
    real(cfg.bandwidth.peak_transfers_per_tick);
  } else if (key == "bandwidth.threshold") {
    real(cfg.bandwidth.threshold_fraction);
  } else if (key == "bandwidth.override") {
    if (value == "auto")
      cfg.bandwidth_override = BandwidthOverride::Auto;
    else if (value == "high")
      cfg.bandwidth_override = BandwidthOverride::AlwaysHigh;
    else if (value == "low")
      cfg.bandwidth_override = BandwidthOverride::AlwaysLow;
    else
      throw ConfigError("config key 'bandwidth.override': expected auto, high or low");
  } else if (key == "nextline.degree") {
    cfg.nextline_degree = detail::parse_int<unsigned>(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

// Applies a flat "key = value" text with optional [section] headers on top of
// `cfg`. A "preset = name" line resets everything to that preset, so it
// belongs at the top of a file.
inline void apply_config_text(SimConfig& cfg, std::string_view text, const std::string& origin = "config")
{
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    std::string key(detail::trim(line.substr(0, eq)));
    if (eq == std::string_view::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": missing value for config key '" + key + "'");
    if (!section.empty() && key.find('.') == std::string::npos)
      key = section + "." + key;
    set_config_key(cfg, key, line.substr(eq + 1));
  }
}

// Layers: built-in default < preset < config file < "key=value" overrides.
inline SimConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {},
                             std::string_view preset = "basic")
{
  SimConfig cfg = preset_config(preset.empty() ? "basic" : preset);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in)
      throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str(), path);
  }
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos)
      throw ConfigError("missing value for config key '" + o + "'");
    set_config_key(cfg, std::string(detail::trim(std::string_view(o).substr(0, eq))), std::string_view(o).substr(eq + 1));
  }
  cfg.cache.validate();
  cfg.agent.validate();
  return cfg;
}

// Finds a config file directly, or under $PYTHIA_CONFIG_DIR, with or without
// the .cfg suffix.
inline std::string resolve_config_path(const std::string& name)
{
  namespace fs = std::filesystem;
  if (fs::exists(name))
    return name;
  if (const char* dir = std::getenv("PYTHIA_CONFIG_DIR")) {
    for (const auto& cand : {fs::path(dir) / name, fs::path(dir) / (name + ".cfg")})
      if (fs::exists(cand))
        return cand.string();
  }
  return name;
}

// Canonical text form: every key, fixed order. Parsing it back reproduces the config.
inline std::string to_config_text(const SimConfig& c)
{
  const auto& a = c.agent;
  std::ostringstream o;
  auto join_ints = [](const auto& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  o << "prefetcher = " << to_string(c.prefetcher) << "\n";
  o << "seed = " << a.rng_seed << "\n";
  o << "\n[hyperparameters]\n";
  o << "alpha = " << detail::fmt_real(a.alpha) << "\n";
  o << "gamma = " << detail::fmt_real(a.gamma) << "\n";
  o << "epsilon = " << detail::fmt_real(a.epsilon) << "\n";
  o << "\n[rewards]\n";
  for (std::size_t i = 0; i < kNumRewardLevels; ++i) {
    auto level = static_cast<RewardLevel>(i);
    o << to_string(level) << " = " << detail::fmt_real(a.rewards.value(level)) << "\n";
  }
  o << "\n[features]\nfeatures = ";
  for (std::size_t i = 0; i < a.features.size(); ++i)
    o << (i ? ", " : "") << a.features[i].name();
  o << "\nglobal_delta = " << (a.global_delta ? "true" : "false") << "\n";
  o << "\n[actions]\nactions = " << join_ints(a.actions) << "\n";
  o << "\n[qvstore]\n";
  o << "planes = " << a.qvstore.num_planes << "\n";
  o << "feature_bins = " << a.qvstore.feature_bins << "\n";
  o << "shifts = " << join_ints(a.qvstore.shift_constants) << "\n";
  o << "hash = " << (a.qvstore.hash == PlaneHash::Identity ? "identity" : "multiply-shift") << "\n";
  o << "update = " << (a.qvstore.update_rule == VaultUpdate::MaxVault ? "max-vault" : "all-vaults") << "\n";
  o << "\n[eq]\ncapacity = " << a.eq_capacity << "\n";
  o << "\n[cache]\n";
  o << "size_bytes = " << c.cache.size_bytes << "\n";
  o << "ways = " << c.cache.ways << "\n";
  o << "fill_latency = " << c.cache.fill_latency_ticks << "\n";
  o << "\n[bandwidth]\n";
  o << "window_ticks = " << c.bandwidth.window_ticks << "\n";
  o << "peak_transfers_per_tick = " << detail::fmt_real(c.bandwidth.peak_transfers_per_tick) << "\n";
  o << "threshold = " << detail::fmt_real(c.bandwidth.threshold_fraction) << "\n";
  o << "override = "
    << (c.bandwidth_override == BandwidthOverride::AlwaysHigh  ? "high"
        : c.bandwidth_override == BandwidthOverride::AlwaysLow ? "low"
                                                                : "auto")
    << "\n";
  o << "\n[nextline]\ndegree = " << c.nextline_degree << "\n";
  return o.str();
}

inline std::string config_hash(const SimConfig& c)
{
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_config_text(c))));
  return buf;
}

} // namespace pythia
