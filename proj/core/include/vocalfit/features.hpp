#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace vocalfit {

enum class BaseFeature { LogMel, Mfcc12, Mfcc22 };

std::string_view to_string(BaseFeature base) noexcept;

struct FeatureVariant {
  BaseFeature base = BaseFeature::LogMel;
  bool hf_emphasis = false;
  bool cmvn = false;

  // CMVN is defined for the cepstral bases only.
  bool valid() const noexcept { return !(cmvn && base == BaseFeature::LogMel); }

  // "logmel", "mfcc12-hf", "mfcc22-hf-norm", ...
  std::string name() const;
  static FeatureVariant parse(std::string_view name);

  friend bool operator==(const FeatureVariant&, const FeatureVariant&) = default;
};

// The ten valid variants in a fixed order: for each base, hf off before on,
// cmvn off before on.
std::vector<FeatureVariant> enumerate_variants();

enum class LogBase { Natural, Ten };

struct FeatureOptions {
  int window = 1024;
  int hop = 512;
  int n_fft = 1024;
  int n_mels = 26;
  double f_min_hz = 0.0;
  double f_max_hz = 10000.0;
  double preemphasis = 0.97;
  // Sinusoidal lifter length applied with HF emphasis; 0 disables it.
  double lifter = 22.0;
  double log_floor = 1e-10;
  bool include_c0 = true;
  LogBase log_base = LogBase::Natural;
};

// Frames-by-dims values, row-major.
struct FeatureMatrix {
  std::size_t frames = 0;
  std::size_t dims = 0;
  std::vector<double> values;
  FeatureVariant variant;

  std::span<const double> row(std::size_t frame) const {
    return {values.data() + frame * dims, dims};
  }
  std::span<double> row(std::size_t frame) { return {values.data() + frame * dims, dims}; }
  double at(std::size_t frame, std::size_t dim) const { return values[frame * dims + dim]; }
};

std::size_t variant_dims(const FeatureVariant& variant, const FeatureOptions& options = {});

// HTK mel scale.
double hz_to_mel(double hz) noexcept;
double mel_to_hz(double mel) noexcept;

// Triangular filters with edges equally spaced on the mel scale between
// f_min and f_max, evaluated at the FFT bin frequencies k * sr / n_fft.
// Weights are unnormalised (peak 1).
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int n_fft, double sample_rate_hz, double f_min_hz, double f_max_hz);

  std::size_t size() const noexcept { return centers_hz_.size(); }
  const std::vector<double>& center_frequencies() const noexcept { return centers_hz_; }
  double weight(std::size_t filter, std::size_t bin) const;

  // power has n_fft / 2 + 1 bins.
  void apply(std::span<const double> power, std::span<double> energies) const;

 private:
  struct Filter {
    std::size_t first_bin;
    std::vector<double> weights;
  };
  std::vector<Filter> filters_;
  std::vector<double> centers_hz_;
};

std::vector<double> preemphasize(std::span<const double> x, double coefficient);

// Orthonormal DCT-II of `input`, first n_out coefficients.
std::vector<double> dct2_orthonormal(std::span<const double> input, std::size_t n_out);
// Inverse of the full orthonormal transform (DCT-III), missing trailing
// coefficients treated as zero.
std::vector<double> idct2_orthonormal(std::span<const double> coeffs, std::size_t n_out);

// w_k = 1 + (L / 2) sin(pi k / L)
std::vector<double> lifter_weights(std::size_t n, double lifter);

// Log mel energies. Throws SignalTooShort when the waveform is shorter than
// one window.
FeatureMatrix log_mel(std::span<const double> waveform, double sample_rate_hz, bool hf_emphasis,
                      const FeatureOptions& options = {});

// Cepstra from an existing log mel matrix. Lifter is applied when the matrix
// was computed with HF emphasis and options.lifter > 0.
FeatureMatrix mfcc_from_log_mel(const FeatureMatrix& log_mel_matrix, int n_coeffs,
                                const FeatureOptions& options = {});

// n in {12, 22}.
FeatureMatrix mfcc(std::span<const double> waveform, double sample_rate_hz, int n_coeffs,
                   bool hf_emphasis, const FeatureOptions& options = {});

// Features for a variant before normalisation (the returned matrix keeps
// cmvn = false; apply_cmvn marks it).
FeatureMatrix extract_features(std::span<const double> waveform, double sample_rate_hz,
                               const FeatureVariant& variant, const FeatureOptions& options = {});

struct CmvnStats {
  std::vector<double> mean;
  std::vector<double> std;  // population, floored
  std::size_t corpus_size = 0;  // matrices
  std::size_t frames = 0;
};

inline constexpr double kCmvnStdFloor = 1e-8;

// Streaming pooled moments; merges with Chan's update so the result does not
// depend on how frames are grouped into matrices.
class CmvnAccumulator {
 public:
  void add(const FeatureMatrix& fm);
  void merge(const CmvnAccumulator& other);
  CmvnStats finish() const;

 private:
  std::size_t dims_ = 0;
  std::size_t matrices_ = 0;
  std::size_t frames_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

CmvnStats compute_cmvn_stats(std::span<const FeatureMatrix> corpus);
FeatureMatrix apply_cmvn(const FeatureMatrix& fm, const CmvnStats& stats);
FeatureMatrix invert_cmvn(const FeatureMatrix& fm, const CmvnStats& stats);

nlohmann::json to_json(const FeatureVariant& variant);
nlohmann::json to_json(const FeatureMatrix& fm);
nlohmann::json to_json(const CmvnStats& stats);
FeatureMatrix feature_matrix_from_json(const nlohmann::json& j);
CmvnStats cmvn_stats_from_json(const nlohmann::json& j);

}  // namespace vocalfit
