#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "semscan/error.hpp"
#include "semscan/pipeline.hpp"

namespace semscan {

/// Flat `key = value` configuration. `#` starts a comment; values may be
/// quoted. Every key must be one of `known_keys()`.
class Config {
 public:
  static constexpr std::array<std::string_view, 36> known_keys() {
    return {"records",          "locations",         "background_end",     "output_dir",
            "background_file",  "background_topics", "foreground_topics",  "alpha",
            "beta",             "background_sweeps", "window_init_sweeps", "window_refit_sweeps",
            "window_days",      "w_max",             "n_max",              "baseline_days",
            "baseline_floor",   "assign_max_iters",  "assign_tol",         "min_count",
            "contrastive",      "threads",           "seed",               "replicas",
            "report_top",       "label",             "trials",             "slope",
            "duration_days",    "region_size",       "event_start",        "fp_targets",
            "null_trials",      "detect_from",       "detect_to",          "ablation"};
  }

  static Config parse(std::string_view text, const std::string& origin = "<config>") {
    Config c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string where = origin + ":" + std::to_string(line_no) + ": ";
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::string_view v = trim(line);
      if (v.empty()) continue;
      if (v.front() == '[') throw ConfigError(where + "sections are not supported (flat key = value only)");
      const auto eq = v.find('=');
      if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
      std::string key(trim(v.substr(0, eq)));
      std::string value(trim(v.substr(eq + 1)));
      if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
        value = value.substr(1, value.size() - 2);
      c.set(key, value);
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  void set(const std::string& key, const std::string& value) {
    const auto keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string require(const std::string& key) const {
    if (auto v = get(key)) return *v;
    throw ConfigError("missing required config key '" + key + "'");
  }

  std::optional<double> get_double(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    try {
      std::size_t used = 0;
      const double d = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument(key);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not a number: '" + *v + "'");
    }
  }

  std::optional<long long> get_int(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    try {
      std::size_t used = 0;
      const long long i = std::stoll(*v, &used);
      if (used != v->size()) throw std::invalid_argument(key);
      return i;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' is not an integer: '" + *v + "'");
    }
  }

  std::optional<bool> get_bool(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: '" + *v + "'");
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    auto v = get(key);
    if (!v) return out;
    std::string item;
    std::istringstream in(*v);
    while (std::getline(in, item, ',')) {
      Config tmp;
      tmp.values_["alpha"] = std::string(trim(item));
      out.push_back(*tmp.get_double("alpha"));
    }
    return out;
  }

  /// Pipeline settings; keys absent from the file keep their defaults.
  PipelineConfig pipeline() const {
    PipelineConfig p;
    auto positive = [&](const std::string& key, long long v) {
      if (v < 1) throw ConfigError("config key '" + key + "' must be >= 1");
      return v;
    };
    if (auto v = get_int("background_topics")) p.background_topics = static_cast<std::size_t>(positive("background_topics", *v));
    if (auto v = get_int("foreground_topics")) p.foreground_topics = static_cast<std::size_t>(positive("foreground_topics", *v));
    if (auto v = get_double("alpha")) p.alpha = *v;
    if (auto v = get_double("beta")) p.beta = *v;
    if (auto v = get_int("background_sweeps")) p.background_sweeps = static_cast<int>(positive("background_sweeps", *v));
    if (auto v = get_int("window_init_sweeps")) p.window_init_sweeps = static_cast<int>(positive("window_init_sweeps", *v));
    if (auto v = get_int("window_refit_sweeps")) p.window_refit_sweeps = static_cast<int>(positive("window_refit_sweeps", *v));
    if (auto v = get_int("window_days")) p.window_days = static_cast<int>(positive("window_days", *v));
    if (auto v = get_int("w_max")) p.scan.w_max = static_cast<int>(positive("w_max", *v));
    if (auto v = get_int("n_max")) p.scan.n_max = static_cast<int>(positive("n_max", *v));
    if (auto v = get_int("baseline_days")) p.baseline_days = static_cast<int>(positive("baseline_days", *v));
    if (auto v = get_double("baseline_floor")) p.scan.baseline_floor = *v;
    if (auto v = get_int("assign_max_iters")) p.assign_max_iters = static_cast<int>(positive("assign_max_iters", *v));
    if (auto v = get_double("assign_tol")) p.assign_tol = *v;
    if (auto v = get_int("min_count")) p.min_count = static_cast<int>(positive("min_count", *v));
    if (auto v = get_bool("contrastive")) p.contrastive = *v;
    if (auto v = get_int("threads")) p.threads = static_cast<unsigned>(positive("threads", *v));
    if (auto v = get_int("seed")) p.seed = static_cast<std::uint64_t>(*v);
    return p;
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace semscan
