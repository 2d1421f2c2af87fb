#pragma once

#include <string>

#include "floorsight/engine.hpp"
#include "floorsight/mixer.hpp"
#include "floorsight/vad.hpp"

namespace floorsight {

// Every tunable in one place, overridable from a flat key=value file
// (e.g. "engine.window=4" or "detectors.aside_delta=9"). The environment
// variable FLOORSIGHT_CONFIG names a default file.
struct Config {
  VadParams vad;
  TurnParams turns;
  DetectorParams detectors;
  EngineParams engine;
  MixerParams mixer;
};

// Parses `text` as key=value lines ('#' comments allowed) over `base`.
// Unknown keys or bad values throw PARSE_ERROR.
Config apply_config_text(Config base, const std::string& text);

// Loads FLOORSIGHT_CONFIG (if set), then the explicit file (if given).
Config load_config(const std::string& params_file = "");

}  // namespace floorsight
