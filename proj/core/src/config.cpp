#include "floorsight/config.hpp"

#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "floorsight/errors.hpp"
#include "floorsight/io.hpp"

namespace floorsight {

namespace {

std::map<std::string, std::function<void(Config&, double)>> numeric_keys() {
  return {
      {"vad.frame_window", [](Config& c, double v) { c.vad.frame_window = v; }},
      {"vad.hop", [](Config& c, double v) { c.vad.hop = v; }},
      {"vad.threshold_offset", [](Config& c, double v) { c.vad.threshold_offset = v; }},
      {"vad.hangover", [](Config& c, double v) { c.vad.hangover = v; }},
      {"vad.min_segment", [](Config& c, double v) { c.vad.min_segment = v; }},
      {"turns.merge_gap", [](Config& c, double v) { c.turns.merge_gap = v; }},
      {"turns.alignment_tolerance", [](Config& c, double v) { c.turns.alignment_tolerance = v; }},
      {"detectors.sit_initial_window", [](Config& c, double v) { c.detectors.sit_initial_window = v; }},
      {"detectors.aside_delta", [](Config& c, double v) { c.detectors.aside_delta = v; }},
      {"detectors.baseline_horizon", [](Config& c, double v) { c.detectors.baseline_horizon = v; }},
      {"detectors.coord_onset_tau", [](Config& c, double v) { c.detectors.coord_onset_tau = v; }},
      {"detectors.coord_min_participants",
       [](Config& c, double v) { c.detectors.coord_min_participants = static_cast<int>(v); }},
      {"detectors.coord_max_burst", [](Config& c, double v) { c.detectors.coord_max_burst = v; }},
      {"detectors.coord_corr_min", [](Config& c, double v) { c.detectors.coord_corr_min = v; }},
      {"detectors.confirm_max_gap", [](Config& c, double v) { c.detectors.confirm_max_gap = v; }},
      {"engine.window", [](Config& c, double v) { c.engine.window = v; }},
      {"engine.decay_half_life", [](Config& c, double v) { c.engine.decay_half_life = v; }},
      {"engine.w_align", [](Config& c, double v) { c.engine.w_align = v; }},
      {"engine.w_overlap", [](Config& c, double v) { c.engine.w_overlap = v; }},
      {"engine.w_coord", [](Config& c, double v) { c.engine.w_coord = v; }},
      {"engine.split_threshold", [](Config& c, double v) { c.engine.split_threshold = v; }},
      {"engine.merge_threshold", [](Config& c, double v) { c.engine.merge_threshold = v; }},
      {"engine.hysteresis", [](Config& c, double v) { c.engine.hysteresis = v; }},
      {"engine.retro_horizon", [](Config& c, double v) { c.engine.retro_horizon = v; }},
      {"engine.stability_drop", [](Config& c, double v) { c.engine.stability_drop = v; }},
      {"engine.stability_window", [](Config& c, double v) { c.engine.stability_window = v; }},
      {"engine.reorder_tolerance", [](Config& c, double v) { c.engine.reorder_tolerance = v; }},
      {"mixer.cross_floor_gain", [](Config& c, double v) { c.mixer.cross_floor_gain = v; }},
      {"mixer.roles_horizon", [](Config& c, double v) { c.mixer.roles_horizon = v; }},
  };
}

}  // namespace

Config apply_config_text(Config base, const std::string& text) {
  const auto keys = numeric_keys();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line = line.substr(start);
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(lineno) + ": missing '='");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());

    auto it = keys.find(key);
    if (it == keys.end()) {
      throw Error(ErrorCode::ParseError,
                  "config line " + std::to_string(lineno) + ": unknown key " + key);
    }
    try {
      size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      it->second(base, v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError,
                  "config line " + std::to_string(lineno) + ": bad value for " + key);
    }
  }
  return base;
}

Config load_config(const std::string& params_file) {
  Config config;
  if (const char* env = std::getenv("FLOORSIGHT_CONFIG"); env && *env) {
    config = apply_config_text(config, slurp(env));
  }
  if (!params_file.empty()) {
    config = apply_config_text(config, slurp(params_file));
  }
  return config;
}

}  // namespace floorsight
