#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "vocalfit/acoustics.hpp"
#include "vocalfit/formant_space.hpp"
#include "vocalfit/tract.hpp"

namespace vocalfit {

struct TargetVowel {
  Vowel vowel = Vowel::A;
  std::filesystem::path wav;  // absolute once loaded
  FormantPoint formants;
  std::vector<double> audio;
  double sample_rate_hz = 0.0;
};

struct TargetSet {
  std::vector<TargetVowel> vowels;
  SpeakerFormantStats stats;  // from renditions, not from the five templates

  // MissingTarget if the vowel is absent.
  const TargetVowel& get(Vowel vowel) const;
};

struct TargetOptions {
  double length_scale = 0.93;
  int renditions = 50;
  // Rendition jitter as a fraction of each parameter's range.
  double perturbation = 0.03;
  std::uint64_t seed = 2020;
  double f0_hz = 120.0;
};

// Hand-tuned target-speaker articulations for /a e i o u/.
const std::array<ParamVector, 5>& target_speaker_params() noexcept;

// Synthesises the five templates plus `renditions` jittered realisations (for
// the speaker statistics) and writes targets.json with one WAV per vowel.
TargetSet make_default_targets(const std::filesystem::path& out_dir, const TargetOptions& options,
                               const AcousticOptions& acoustics, const SynthesisOptions& synthesis);

// Reads targets.json:
//   {"vowels": [{"vowel", "wav", "f1_hz", "f2_hz"}...],
//    "stats": {"mean_f1_hz", "std_f1_hz", "mean_f2_hz", "std_f2_hz", "source", "count"}}
// WAV paths are relative to the directory. Hand-made files with recorded
// targets and measured formants use the same schema.
TargetSet load_targets(const std::filesystem::path& dir);

}  // namespace vocalfit
