#include "vocalfit/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "fft.hpp"
#include "vocalfit/error.hpp"

namespace vocalfit {

using cplx = std::complex<double>;
using std::numbers::pi;

AcousticOptions AcousticOptions::lossless() {
  AcousticOptions o;
  o.wall_loss = false;
  o.radiation = Radiation::Ideal;
  return o;
}

namespace {

// Kinematic viscosity and thermal diffusivity of air, cm^2/s.
constexpr double kViscosity = 0.15;
constexpr double kThermal = 0.22;
// Relative weight of the thermal term (gamma - 1 folded in).
constexpr double kThermalWeight = 0.4;

std::size_t grid_size(double df, double f_max) {
  return static_cast<std::size_t>(std::floor(f_max / df + 1e-9));
}

}  // namespace

TransferFunction transfer_function(const AreaFunction& area, const AcousticOptions& o) {
  if (!(o.df_hz > 0.0) || !(o.f_max_hz >= 5000.0)) {
    throw Error(Errc::InvalidArgument, "need df > 0 and f_max >= 5000 Hz");
  }
  if (area.sections.empty()) throw Error(Errc::InvalidArgument, "empty area function");
  for (std::size_t i = 0; i < area.sections.size(); ++i) {
    if (area.sections[i].area_cm2 < o.closure_threshold_cm2) {
      char msg[96];
      std::snprintf(msg, sizeof msg, "section %zu area %.4g cm^2 below closure threshold", i,
                    area.sections[i].area_cm2);
      throw Error(Errc::NearClosure, msg);
    }
  }

  const double c = o.sound_speed_cm_s;
  const double rho = o.air_density_g_cm3;
  const std::size_t n = grid_size(o.df_hz, o.f_max_hz);
  const std::size_t s = area.sections.size();

  std::vector<double> impedance(s), radius(s), length(s);
  for (std::size_t k = 0; k < s; ++k) {
    impedance[k] = rho * c / area.sections[k].area_cm2;
    radius[k] = std::sqrt(area.sections[k].area_cm2 / pi);
    length[k] = area.sections[k].length_cm;
  }

  const double lip_area = area.sections.back().area_cm2;
  const double rad_r = 128.0 * rho * c / (9.0 * pi * pi * lip_area);
  const double rad_l = 8.0 * rho / (3.0 * pi * std::sqrt(pi * lip_area));

  TransferFunction tf;
  tf.df_hz = o.df_hz;
  tf.freqs_hz.resize(n);
  tf.magnitude.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(i + 1) * o.df_hz;
    const double w = 2.0 * pi * f;
    const double boundary = std::sqrt(w * kViscosity / 2.0) +
                            kThermalWeight * std::sqrt(w * kThermal / 2.0);

    cplx a{1.0}, b{0.0}, cc{0.0}, d{1.0};
    for (std::size_t k = 0; k < s; ++k) {
      double alpha = 0.0;
      if (o.wall_loss) alpha = pi * o.wall_bandwidth_hz / c + boundary / (radius[k] * c);
      const double theta = w / c * length[k];
      const double mag = std::exp(alpha * length[k]);
      const cplx e = std::polar(mag, theta);
      const cplx ei = std::polar(1.0 / mag, -theta);
      const cplx ch = 0.5 * (e + ei);
      const cplx sh = 0.5 * (e - ei);
      const double z = impedance[k];
      const cplx m01 = z * sh;
      const cplx m10 = sh / z;
      const cplx na = a * ch + b * m10;
      const cplx nb = a * m01 + b * ch;
      const cplx nc = cc * ch + d * m10;
      const cplx nd = cc * m01 + d * ch;
      a = na;
      b = nb;
      cc = nc;
      d = nd;
    }

    cplx zr{0.0};
    if (o.radiation == Radiation::Baffle) {
      const cplx jwl{0.0, w * rad_l};
      zr = jwl * rad_r / (rad_r + jwl);
    }
    const cplx denom = cc * zr + d;
    const double h = 1.0 / std::abs(denom);
    if (!std::isfinite(h) || !std::isfinite(denom.real()) || !std::isfinite(denom.imag())) {
      throw Error(Errc::NumericalOverflow, "chain-matrix cascade left the finite range");
    }
    tf.freqs_hz[i] = f;
    tf.magnitude[i] = h;
  }
  return tf;
}

std::vector<SpectralPeak> find_spectral_peaks(const TransferFunction& tf,
                                              const AcousticOptions& o) {
  const std::size_t n = tf.magnitude.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = 20.0 * std::log10(std::max(tf.magnitude[i], 1e-300));
  }

  std::vector<SpectralPeak> peaks;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (tf.freqs_hz[i] > o.formant_search_max_hz) break;
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;

    // Topographic prominence: lowest point on each side before the signal
    // rises above the peak again.
    double left_min = y[i];
    for (std::size_t j = i; j-- > 0;) {
      if (y[j] > y[i]) break;
      left_min = std::min(left_min, y[j]);
    }
    double right_min = y[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (y[j] > y[i]) break;
      right_min = std::min(right_min, y[j]);
    }
    const double prominence = y[i] - std::max(left_min, right_min);
    if (prominence < o.peak_prominence_db) continue;

    const double den = y[i - 1] - 2.0 * y[i] + y[i + 1];
    double delta = 0.0;
    if (den < 0.0) delta = std::clamp(0.5 * (y[i - 1] - y[i + 1]) / den, -0.5, 0.5);
    const double step = tf.freqs_hz[i + 1] - tf.freqs_hz[i];
    peaks.push_back({tf.freqs_hz[i] + delta * step,
                     y[i] - 0.25 * (y[i - 1] - y[i + 1]) * delta, prominence});
  }
  return peaks;
}

FormantPoint pick_formants(const TransferFunction& tf, const AcousticOptions& o) {
  auto peaks = find_spectral_peaks(tf, o);
  if (peaks.size() < 2) {
    throw Error(Errc::TooFewPeaks,
                "found " + std::to_string(peaks.size()) + " qualifying peak(s), need 2");
  }
  return {peaks[0].freq_hz, peaks[1].freq_hz};
}

namespace {

std::vector<double> design_fir(const TransferFunction& tf, double sample_rate_hz, int length) {
  const std::size_t n = static_cast<std::size_t>(length);
  const std::size_t bins = n / 2 + 1;
  std::vector<cplx> spectrum(bins);
  const double f_top = tf.freqs_hz.empty() ? 0.0 : tf.freqs_hz.back();
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n);
    double m = 0.0;
    if (!tf.freqs_hz.empty() && f <= f_top) {
      if (f <= tf.freqs_hz.front()) {
        m = tf.magnitude.front();
      } else {
        const double pos = (f - tf.freqs_hz.front()) / tf.df_hz;
        const auto lo = std::min(static_cast<std::size_t>(pos), tf.magnitude.size() - 1);
        const auto hi = std::min(lo + 1, tf.magnitude.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        m = tf.magnitude[lo] * (1.0 - frac) + tf.magnitude[hi] * frac;
      }
    }
    spectrum[k] = m;
  }

  std::vector<double> impulse(n);
  detail::real_fft(n).inverse(spectrum, impulse);
  std::vector<double> fir(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 * (1.0 - std::cos(2.0 * pi * static_cast<double>(i) / n));
    fir[i] = impulse[(i + n / 2) % n] / static_cast<double>(n) * w;
  }
  return fir;
}

// Differentiated, low-passed impulse train. Pulse positions are split across
// the two neighbouring samples so the period is exact on average.
std::vector<double> glottal_source(std::size_t count, double f0_hz, double sample_rate_hz,
                                   double corner_hz) {
  std::vector<double> x(count + 1, 0.0);
  const double period = sample_rate_hz / f0_hz;
  for (double t = 0.0; t < static_cast<double>(count); t += period) {
    const auto i = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(i);
    x[i] += 1.0 - frac;
    x[i + 1] += frac;
  }
  x.resize(count);

  const double a = std::exp(-2.0 * pi * corner_hz / sample_rate_hz);
  for (int stage = 0; stage < 3; ++stage) {
    double state = 0.0;
    for (double& v : x) {
      state = (1.0 - a) * v + a * state;
      v = state;
    }
  }
  double prev = 0.0;
  for (double& v : x) {
    const double cur = v;
    v = cur - prev;
    prev = cur;
  }
  return x;
}

}  // namespace

std::vector<double> synthesize_vowel(const TransferFunction& tf, double f0_hz, double duration_s,
                                     double sample_rate_hz, const SynthesisOptions& o) {
  if (!(f0_hz >= 50.0 && f0_hz <= 500.0)) {
    throw Error(Errc::InvalidArgument, "f0 must lie in [50, 500] Hz");
  }
  if (!(duration_s > 0.0)) throw Error(Errc::InvalidArgument, "duration must be positive");
  if (!(sample_rate_hz > 0.0)) throw Error(Errc::InvalidArgument, "sample rate must be positive");
  if (o.fir_length < 16 || o.fir_length % 2 != 0) {
    throw Error(Errc::InvalidArgument, "fir_length must be even and at least 16");
  }
  if (tf.freqs_hz.empty() || tf.freqs_hz.size() != tf.magnitude.size()) {
    throw Error(Errc::InvalidArgument, "empty or inconsistent transfer function");
  }

  const auto n_out = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  const auto taps = static_cast<std::size_t>(o.fir_length);
  const auto fir = design_fir(tf, sample_rate_hz, o.fir_length);
  const auto source = glottal_source(n_out + taps, f0_hz, sample_rate_hz, o.source_corner_hz);

  const std::size_t nfft = detail::next_pow2(source.size() + taps - 1);
  auto& fft = detail::real_fft(nfft);
  std::vector<cplx> sx(nfft / 2 + 1), hx(nfft / 2 + 1);
  fft.forward(source, sx);
  fft.forward(fir, hx);
  for (std::size_t k = 0; k < sx.size(); ++k) sx[k] *= hx[k];
  std::vector<double> conv(nfft);
  fft.inverse(sx, conv);

  // Skip the first FIR length so the output starts in steady state.
  std::vector<double> out(conv.begin() + static_cast<std::ptrdiff_t>(taps),
                          conv.begin() + static_cast<std::ptrdiff_t>(taps + n_out));
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    const double g = o.peak_level / peak;
    for (double& v : out) v *= g;
  }
  return out;
}

std::vector<double> synthesize_vowel(const AreaFunction& area, double f0_hz, double duration_s,
                                     double sample_rate_hz, const AcousticOptions& acoustics,
                                     const SynthesisOptions& options) {
  return synthesize_vowel(transfer_function(area, acoustics), f0_hz, duration_s, sample_rate_hz,
                          options);
}

bool low_frequency_energy_ok(std::span<const double> waveform, double sample_rate_hz,
                             const LowFrequencyOptions& o) {
  if (waveform.empty() || !(sample_rate_hz > 0.0)) return false;
  const std::size_t nfft = std::max<std::size_t>(2, detail::next_pow2(waveform.size()));
  std::vector<cplx> spec(nfft / 2 + 1);
  detail::real_fft(nfft).forward(waveform, spec);
  double low = 0.0, total = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double e = std::norm(spec[k]);
    total += e;
    if (static_cast<double>(k) * sample_rate_hz / static_cast<double>(nfft) <= o.cutoff_hz) low += e;
  }
  return total > 0.0 && low >= o.min_ratio * total;
}

void write_transfer_csv(const TransferFunction& tf, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  f << "freq_hz,magnitude\n";
  char line[80];
  for (std::size_t i = 0; i < tf.freqs_hz.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", tf.freqs_hz[i], tf.magnitude[i]);
    f << line;
  }
  if (!f) throw Error(Errc::IoError, "failed writing " + path.string());
}

}  // namespace vocalfit
