#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace floorsight {

struct WavData {
  uint32_t rate = 0;
  std::vector<int16_t> samples;  // mono
};

// Reads a RIFF/WAVE file containing 16-bit signed little-endian PCM, one
// channel. Throws PARSE_ERROR on anything else.
WavData read_wav(const std::string& path);

void write_wav(const std::string& path, const WavData& data);

}  // namespace floorsight
