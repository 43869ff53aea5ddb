#include "vocalfit/formant_space.hpp"

#include <cmath>
#include <string>

#include "vocalfit/error.hpp"

namespace vocalfit {

std::string_view to_string(Vowel vowel) noexcept {
  switch (vowel) {
    case Vowel::A: return "a";
    case Vowel::E: return "e";
    case Vowel::I: return "i";
    case Vowel::O: return "o";
    case Vowel::U: return "u";
  }
  return "a";
}

Vowel vowel_from_string(std::string_view label) {
  for (Vowel v : kAllVowels) {
    if (to_string(v) == label) return v;
  }
  throw Error(Errc::InvalidArgument, "unknown vowel '" + std::string(label) + "'");
}

std::string_view to_string(StatsSource source) noexcept {
  return source == StatsSource::TargetRenditions ? "target_renditions" : "model_dataset";
}

StatsSource stats_source_from_string(std::string_view name) {
  if (name == "model_dataset") return StatsSource::ModelDataset;
  if (name == "target_renditions") return StatsSource::TargetRenditions;
  throw Error(Errc::InvalidArgument, "unknown stats source '" + std::string(name) + "'");
}

SpeakerFormantStats SpeakerFormantStats::from_points(std::span<const FormantPoint> points,
                                                     StatsSource source) {
  if (points.size() < 2) {
    throw Error(Errc::InvalidArgument, "formant statistics need at least two points");
  }
  const double n = static_cast<double>(points.size());
  double m1 = 0.0, m2 = 0.0;
  for (const auto& p : points) {
    m1 += p.f1_hz;
    m2 += p.f2_hz;
  }
  m1 /= n;
  m2 /= n;
  double v1 = 0.0, v2 = 0.0;
  for (const auto& p : points) {
    v1 += (p.f1_hz - m1) * (p.f1_hz - m1);
    v2 += (p.f2_hz - m2) * (p.f2_hz - m2);
  }
  SpeakerFormantStats s;
  s.mean_f1_hz = m1;
  s.mean_f2_hz = m2;
  s.std_f1_hz = std::sqrt(v1 / n);
  s.std_f2_hz = std::sqrt(v2 / n);
  s.source = source;
  s.count = points.size();
  if (!(s.std_f1_hz > 0.0) || !(s.std_f2_hz > 0.0)) {
    throw Error(Errc::InvalidArgument, "formant statistics have zero spread");
  }
  return s;
}

ZPoint zscore_formants(const FormantPoint& fp, const SpeakerFormantStats& s) noexcept {
  return {(fp.f1_hz - s.mean_f1_hz) / s.std_f1_hz, (fp.f2_hz - s.mean_f2_hz) / s.std_f2_hz};
}

double formant_error(const ZPoint& a, const ZPoint& b) noexcept {
  return std::hypot(a.z1 - b.z1, a.z2 - b.z2);
}

}  // namespace vocalfit
