#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "vocalfit/acoustics.hpp"

namespace vocalfit {

enum class Vowel { A, E, I, O, U };

inline constexpr std::array<Vowel, 5> kAllVowels{Vowel::A, Vowel::E, Vowel::I, Vowel::O,
                                                 Vowel::U};

std::string_view to_string(Vowel vowel) noexcept;  // "a" ... "u"
Vowel vowel_from_string(std::string_view label);

enum class StatsSource { ModelDataset, TargetRenditions };

std::string_view to_string(StatsSource source) noexcept;
StatsSource stats_source_from_string(std::string_view name);

// Per-speaker formant statistics used for z-scoring.
struct SpeakerFormantStats {
  double mean_f1_hz = 0.0;
  double std_f1_hz = 1.0;
  double mean_f2_hz = 0.0;
  double std_f2_hz = 1.0;
  StatsSource source = StatsSource::ModelDataset;
  std::size_t count = 0;

  // Population moments; InvalidArgument if fewer than two points or a
  // degenerate spread.
  static SpeakerFormantStats from_points(std::span<const FormantPoint> points, StatsSource source);
};

struct ZPoint {
  double z1 = 0.0;
  double z2 = 0.0;

  friend bool operator==(const ZPoint&, const ZPoint&) = default;
};

ZPoint zscore_formants(const FormantPoint& fp, const SpeakerFormantStats& stats) noexcept;

// Euclidean distance in the normalised F1-F2 plane.
double formant_error(const ZPoint& candidate, const ZPoint& target) noexcept;

}  // namespace vocalfit
