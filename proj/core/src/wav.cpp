#include "floorsight/wav.hpp"

#include <cstring>
#include <fstream>

#include "floorsight/errors.hpp"

namespace floorsight {

namespace {

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::ParseError, path + ": not a RIFF/WAVE file");
  }

  WavData wav;
  bool got_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    const uint32_t size = read_u32(buf.data() + pos + 4);
    const size_t body = pos + 8;
    if (body + size > buf.size()) throw Error(ErrorCode::ParseError, path + ": truncated chunk");

    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::ParseError, path + ": short fmt chunk");
      const uint16_t format = read_u16(buf.data() + body);
      const uint16_t channels = read_u16(buf.data() + body + 2);
      const uint16_t bits = read_u16(buf.data() + body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw Error(ErrorCode::ParseError, path + ": expected mono 16-bit PCM");
      }
      wav.rate = read_u32(buf.data() + body + 4);
      got_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!got_fmt) throw Error(ErrorCode::ParseError, path + ": data before fmt");
      wav.samples.resize(size / 2);
      for (size_t i = 0; i < wav.samples.size(); ++i) {
        wav.samples[i] = static_cast<int16_t>(read_u16(buf.data() + body + 2 * i));
      }
      return wav;
    }
    pos = body + size + (size & 1);  // chunks are word-aligned
  }
  throw Error(ErrorCode::ParseError, path + ": no data chunk");
}

void write_wav(const std::string& path, const WavData& data) {
  const uint32_t data_bytes = static_cast<uint32_t>(data.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, data.rate);
  put_u32(out, data.rate * 2);  // byte rate
  put_u16(out, 2);              // block align
  put_u16(out, 16);             // bits
  out += "data";
  put_u32(out, data_bytes);
  for (const int16_t s : data.samples) put_u16(out, static_cast<uint16_t>(s));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ParseError, "cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace floorsight
