#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace vocalfit {

struct WavData {
  std::vector<double> samples;  // mono, nominally [-1, 1]
  double sample_rate_hz = 0.0;
};

// Mono 16-bit PCM. Samples are clipped to [-1, 1] and rounded.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               double sample_rate_hz);

// Reads 16/24/32-bit PCM or 32-bit float; multichannel input is averaged.
WavData read_wav(const std::filesystem::path& path);

}  // namespace vocalfit
