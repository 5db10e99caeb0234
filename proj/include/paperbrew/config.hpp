#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "paperbrew/util.hpp"

// Runtime configuration with a strict precedence chain: command-line
// flags beat environment variables beat the config file beat built-in
// defaults. The file is loaded by hand (not through the CLI parser)
// because the parser would otherwise rank it above the environment.

namespace paperbrew {

namespace fs = std::filesystem;

struct Config {
  fs::path data_dir = "data";
  std::string feed_url;
  std::string feed_token;
  std::string fixtures_dir;      // enables fixture feed + replay provider paths
  std::string provider = "mock"; // mock | fixture | live | none
  std::string provider_url;
  std::string provider_model = "default";
  std::string provider_key;
  std::string alias_table;       // optional TSV path
  int concurrency = 4;
  bool raw_labels = false;       // analytics over raw labels, not clusters
  int target_clusters = 20;
};

inline bool valid_provider_kind(const std::string& kind) {
  return kind == "mock" || kind == "fixture" || kind == "live" || kind == "none";
}

// TOML-style key=value lines. Section headers are ignored (keys are
// globally unique), '#' starts a comment, values may be quoted.
inline std::map<std::string, std::string> parse_config_file(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!key.empty()) out[key] = value;
  }
  return out;
}

inline bool parse_bool(const std::string& value, bool fallback) {
  std::string v = to_lower(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  return fallback;
}

// Applies recognized keys over the current values; unknown keys are
// reported, not fatal.
inline void apply_config_map(Config& cfg, const std::map<std::string, std::string>& kv,
                             WarningLog& warnings) {
  for (const auto& [key, value] : kv) {
    if (key == "data-dir" || key == "data_dir")
      cfg.data_dir = value;
    else if (key == "feed-url" || key == "feed_url")
      cfg.feed_url = value;
    else if (key == "feed-token" || key == "feed_token")
      cfg.feed_token = value;
    else if (key == "fixtures-dir" || key == "fixtures_dir")
      cfg.fixtures_dir = value;
    else if (key == "provider")
      cfg.provider = value;
    else if (key == "provider-url" || key == "provider_url")
      cfg.provider_url = value;
    else if (key == "provider-model" || key == "provider_model")
      cfg.provider_model = value;
    else if (key == "provider-key" || key == "provider_key")
      cfg.provider_key = value;
    else if (key == "alias-table" || key == "alias_table")
      cfg.alias_table = value;
    else if (key == "concurrency")
      cfg.concurrency = std::max(1, std::atoi(value.c_str()));
    else if (key == "raw-labels" || key == "raw_labels")
      cfg.raw_labels = parse_bool(value, cfg.raw_labels);
    else if (key == "target-clusters" || key == "target_clusters")
      cfg.target_clusters = std::max(1, std::atoi(value.c_str()));
    else
      warnings.add("unknown config key ignored: " + key);
  }
}

}  // namespace paperbrew
