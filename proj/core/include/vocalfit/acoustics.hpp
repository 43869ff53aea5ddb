#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "vocalfit/tract.hpp"

namespace vocalfit {

enum class Radiation {
  Baffle,  // piston in an infinite baffle, parallel R-L approximation
  Ideal,   // pressure release at the lips (Z = 0)
};

struct AcousticOptions {
  double sound_speed_cm_s = 35000.0;
  double air_density_g_cm3 = 1.14e-3;
  bool wall_loss = true;
  // Frequency-independent damping expressed as the resonance bandwidth it
  // would produce on its own; boundary-layer losses are added on top.
  double wall_bandwidth_hz = 40.0;
  Radiation radiation = Radiation::Baffle;
  double df_hz = 5.0;
  double f_max_hz = 10000.0;
  double formant_search_max_hz = 5000.0;
  double peak_prominence_db = 3.0;
  double closure_threshold_cm2 = 0.1;

  // No wall or boundary-layer loss, ideal open end.
  static AcousticOptions lossless();
};

// |U_lips / U_glottis| on the grid {df, 2 df, ..., f_max}.
struct TransferFunction {
  double df_hz = 0.0;
  std::vector<double> freqs_hz;
  std::vector<double> magnitude;
};

struct FormantPoint {
  double f1_hz = 0.0;
  double f2_hz = 0.0;

  friend bool operator==(const FormantPoint&, const FormantPoint&) = default;
};

// Chain-matrix (transmission line) evaluation of the area function. Throws
// NearClosure when a section is below the closure threshold and
// NumericalOverflow if the cascade leaves the finite range.
TransferFunction transfer_function(const AreaFunction& area, const AcousticOptions& options = {});

struct SpectralPeak {
  double freq_hz;
  double level_db;
  double prominence_db;
};

// Local maxima of 20 log10 |H| up to formant_search_max_hz whose topographic
// prominence is at least peak_prominence_db, refined by a parabola through
// the log-magnitude neighbours. Ascending frequency.
std::vector<SpectralPeak> find_spectral_peaks(const TransferFunction& tf,
                                              const AcousticOptions& options = {});

// Lowest two peaks; TooFewPeaks when there are fewer than two.
FormantPoint pick_formants(const TransferFunction& tf, const AcousticOptions& options = {});

struct SynthesisOptions {
  double sample_rate_hz = 44100.0;
  double duration_s = 0.5;
  double f0_adult_hz = 120.0;
  double f0_child_hz = 220.0;
  // Corner of the three-pole source shaping filter. With the differentiation
  // that follows, the source falls at 12 dB/octave above this frequency.
  double source_corner_hz = 100.0;
  double peak_level = 0.9;
  int fir_length = 4096;

  double f0_for(Model model) const noexcept {
    return model == Model::Child ? f0_child_hz : f0_adult_hz;
  }
};

// Source-filter synthesis of a static vowel: a differentiated glottal pulse
// train convolved with a linear-phase FIR built from |H|. Returns
// round(duration * sr) samples peak-normalised to options.peak_level.
std::vector<double> synthesize_vowel(const AreaFunction& area, double f0_hz, double duration_s,
                                     double sample_rate_hz, const AcousticOptions& acoustics = {},
                                     const SynthesisOptions& options = {});

// Same, from a precomputed transfer function.
std::vector<double> synthesize_vowel(const TransferFunction& tf, double f0_hz, double duration_s,
                                     double sample_rate_hz, const SynthesisOptions& options = {});

struct LowFrequencyOptions {
  double cutoff_hz = 500.0;
  double min_ratio = 0.01;
};

// True iff energy in [0, cutoff] is at least min_ratio of the total. Silent
// signals are rejected.
bool low_frequency_energy_ok(std::span<const double> waveform, double sample_rate_hz,
                             const LowFrequencyOptions& options = {});

// Two-column CSV: freq_hz,magnitude.
void write_transfer_csv(const TransferFunction& tf, const std::filesystem::path& path);

}  // namespace vocalfit
