#include "vocalfit/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "vocalfit/error.hpp"

namespace vocalfit {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0)) throw Error(Errc::InvalidArgument, "sample rate must be positive");
  const auto rate = static_cast<std::uint32_t>(std::lround(sample_rate_hz));
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);

  std::string buf;
  buf.reserve(44 + data_bytes);
  buf += "RIFF";
  put_u32(buf, 36 + data_bytes);
  buf += "WAVEfmt ";
  put_u32(buf, 16);
  put_u16(buf, 1);  // PCM
  put_u16(buf, 1);  // mono
  put_u32(buf, rate);
  put_u32(buf, rate * 2);
  put_u16(buf, 2);
  put_u16(buf, 16);
  buf += "data";
  put_u32(buf, data_bytes);
  for (double s : samples) {
    double c = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
    auto v = static_cast<std::int16_t>(std::lround(c * 32767.0));
    put_u16(buf, static_cast<std::uint16_t>(v));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw Error(Errc::IoError, "failed writing " + path.string());
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 12 || raw.compare(0, 4, "RIFF") != 0 || raw.compare(8, 4, "WAVE") != 0) {
    throw Error(Errc::SchemaError, path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    std::uint32_t size = get_u32(bytes + pos + 4);
    const unsigned char* body = bytes + pos + 8;
    std::size_t avail = std::min<std::size_t>(size, raw.size() - pos - 8);
    if (raw.compare(pos, 4, "fmt ") == 0 && avail >= 16) {
      format = get_u16(body);
      channels = get_u16(body + 2);
      rate = get_u32(body + 4);
      bits = get_u16(body + 14);
      if (format == 0xFFFE && avail >= 26) format = get_u16(body + 24);  // extensible
    } else if (raw.compare(pos, 4, "data") == 0) {
      data = body;
      data_size = avail;
    }
    pos += 8 + size + (size & 1);
  }
  if (!data || channels == 0 || rate == 0) {
    throw Error(Errc::SchemaError, path.string() + ": missing fmt or data chunk");
  }
  const bool pcm = format == 1 && (bits == 16 || bits == 24 || bits == 32);
  const bool flt = format == 3 && bits == 32;
  if (!pcm && !flt) {
    throw Error(Errc::SchemaError, path.string() + ": unsupported sample format");
  }

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  WavData out;
  out.sample_rate_hz = rate;
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const unsigned char* s = data + (i * channels + ch) * width;
      double v;
      if (flt) {
        float x;
        std::memcpy(&x, s, 4);
        v = x;
      } else if (bits == 16) {
        v = std::max(static_cast<std::int16_t>(get_u16(s)) / 32767.0, -1.0);
      } else if (bits == 24) {
        std::int32_t x = s[0] | (s[1] << 8) | (s[2] << 16);
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(get_u32(s)) / 2147483648.0;
      }
      acc += v;
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

}  // namespace vocalfit
