#include "vocalfit/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <nlohmann/json.hpp>

#include "fft.hpp"
#include "vocalfit/error.hpp"

namespace vocalfit {

using std::numbers::pi;

std::string_view to_string(BaseFeature base) noexcept {
  switch (base) {
    case BaseFeature::LogMel: return "logmel";
    case BaseFeature::Mfcc12: return "mfcc12";
    case BaseFeature::Mfcc22: return "mfcc22";
  }
  return "logmel";
}

std::string FeatureVariant::name() const {
  std::string s(to_string(base));
  if (hf_emphasis) s += "-hf";
  if (cmvn) s += "-norm";
  return s;
}

FeatureVariant FeatureVariant::parse(std::string_view name) {
  FeatureVariant v;
  std::string_view rest = name;
  auto take = [&rest](std::string_view prefix) {
    if (rest.substr(0, prefix.size()) != prefix) return false;
    rest.remove_prefix(prefix.size());
    return true;
  };
  if (take("logmel")) {
    v.base = BaseFeature::LogMel;
  } else if (take("mfcc12")) {
    v.base = BaseFeature::Mfcc12;
  } else if (take("mfcc22")) {
    v.base = BaseFeature::Mfcc22;
  } else {
    throw Error(Errc::InvalidArgument, "unknown feature variant '" + std::string(name) + "'");
  }
  v.hf_emphasis = take("-hf");
  v.cmvn = take("-norm");
  if (!rest.empty() || !v.valid()) {
    throw Error(Errc::InvalidArgument, "unknown feature variant '" + std::string(name) + "'");
  }
  return v;
}

std::vector<FeatureVariant> enumerate_variants() {
  std::vector<FeatureVariant> out;
  for (auto base : {BaseFeature::LogMel, BaseFeature::Mfcc12, BaseFeature::Mfcc22}) {
    for (bool hf : {false, true}) {
      for (bool cmvn : {false, true}) {
        FeatureVariant v{base, hf, cmvn};
        if (v.valid()) out.push_back(v);
      }
    }
  }
  return out;
}

std::size_t variant_dims(const FeatureVariant& variant, const FeatureOptions& options) {
  switch (variant.base) {
    case BaseFeature::LogMel: return static_cast<std::size_t>(options.n_mels);
    case BaseFeature::Mfcc12: return 12;
    case BaseFeature::Mfcc22: return 22;
  }
  return 0;
}

double hz_to_mel(double hz) noexcept { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) noexcept { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_mels, int n_fft, double sample_rate_hz, double f_min_hz,
                             double f_max_hz) {
  if (n_mels < 1 || n_fft < 2 || !(sample_rate_hz > 0.0) || !(f_min_hz >= 0.0) ||
      !(f_max_hz > f_min_hz) || f_max_hz > sample_rate_hz / 2.0 + 1e-9) {
    throw Error(Errc::InvalidArgument, "invalid mel filterbank geometry");
  }
  const double m_lo = hz_to_mel(f_min_hz);
  const double m_hi = hz_to_mel(f_max_hz);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / (n_mels + 1));
  }
  const std::size_t bins = static_cast<std::size_t>(n_fft) / 2 + 1;
  const double bin_hz = sample_rate_hz / n_fft;
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    Filter filter{bins, {}};
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double w = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
      if (w > 0.0) {
        if (filter.first_bin == bins) filter.first_bin = k;
        filter.weights.resize(k - filter.first_bin + 1, 0.0);
        filter.weights.back() = w;
      }
    }
    if (filter.first_bin == bins) filter.first_bin = 0;
    filters_.push_back(std::move(filter));
    centers_hz_.push_back(mid);
  }
}

double MelFilterbank::weight(std::size_t filter, std::size_t bin) const {
  const auto& f = filters_.at(filter);
  if (bin < f.first_bin || bin >= f.first_bin + f.weights.size()) return 0.0;
  return f.weights[bin - f.first_bin];
}

void MelFilterbank::apply(std::span<const double> power, std::span<double> energies) const {
  for (std::size_t m = 0; m < filters_.size(); ++m) {
    const auto& f = filters_[m];
    double acc = 0.0;
    for (std::size_t i = 0; i < f.weights.size() && f.first_bin + i < power.size(); ++i) {
      acc += f.weights[i] * power[f.first_bin + i];
    }
    energies[m] = acc;
  }
}

std::vector<double> preemphasize(std::span<const double> x, double coefficient) {
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    y[n] = n == 0 ? x[0] : x[n] - coefficient * x[n - 1];
  }
  return y;
}

namespace {

double dct_scale(std::size_t k, std::size_t n) {
  return std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n));
}

// Row-major n_out x n basis of the orthonormal DCT-II.
std::vector<double> dct_basis(std::size_t n, std::size_t n_out) {
  std::vector<double> b(n_out * n);
  for (std::size_t k = 0; k < n_out; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      b[k * n + i] = dct_scale(k, n) * std::cos(pi * static_cast<double>(k) *
                                                (2.0 * static_cast<double>(i) + 1.0) /
                                                (2.0 * static_cast<double>(n)));
    }
  }
  return b;
}

}  // namespace

std::vector<double> dct2_orthonormal(std::span<const double> input, std::size_t n_out) {
  const std::size_t n = input.size();
  if (n == 0 || n_out > n) throw Error(Errc::InvalidArgument, "DCT needs 0 < n_out <= n");
  const auto basis = dct_basis(n, n_out);
  std::vector<double> out(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    out[k] = std::inner_product(input.begin(), input.end(), basis.begin() + k * n, 0.0);
  }
  return out;
}

std::vector<double> idct2_orthonormal(std::span<const double> coeffs, std::size_t n_out) {
  if (n_out == 0 || coeffs.size() > n_out) {
    throw Error(Errc::InvalidArgument, "inverse DCT needs coeffs <= n_out");
  }
  const auto basis = dct_basis(n_out, coeffs.size());
  std::vector<double> out(n_out, 0.0);
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    for (std::size_t i = 0; i < n_out; ++i) out[i] += coeffs[k] * basis[k * n_out + i];
  }
  return out;
}

std::vector<double> lifter_weights(std::size_t n, double lifter) {
  std::vector<double> w(n, 1.0);
  if (lifter > 0.0) {
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = 1.0 + lifter / 2.0 * std::sin(pi * static_cast<double>(k) / lifter);
    }
  }
  return w;
}

FeatureMatrix log_mel(std::span<const double> waveform, double sample_rate_hz, bool hf_emphasis,
                      const FeatureOptions& o) {
  if (o.window < 2 || o.hop < 1 || o.n_fft < o.window) {
    throw Error(Errc::InvalidArgument, "invalid framing (need window >= 2, hop >= 1, n_fft >= window)");
  }
  const auto window = static_cast<std::size_t>(o.window);
  const auto hop = static_cast<std::size_t>(o.hop);
  if (waveform.size() < window) {
    throw Error(Errc::SignalTooShort, std::to_string(waveform.size()) +
                                          " samples is shorter than one " +
                                          std::to_string(window) + "-sample frame");
  }
  if (!(o.log_floor > 0.0)) throw Error(Errc::InvalidArgument, "log floor must be positive");

  std::vector<double> x;
  std::span<const double> signal = waveform;
  if (hf_emphasis) {
    x = preemphasize(waveform, o.preemphasis);
    signal = x;
  }

  const MelFilterbank bank(o.n_mels, o.n_fft, sample_rate_hz, o.f_min_hz, o.f_max_hz);
  const std::size_t frames = 1 + (signal.size() - window) / hop;
  const auto n_fft = static_cast<std::size_t>(o.n_fft);
  const std::size_t bins = n_fft / 2 + 1;

  std::vector<double> taper(window);
  for (std::size_t i = 0; i < window; ++i) {
    taper[i] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(window));
  }

  FeatureMatrix fm;
  fm.frames = frames;
  fm.dims = bank.size();
  fm.values.resize(frames * fm.dims);
  fm.variant = {BaseFeature::LogMel, hf_emphasis, false};

  auto& fft = detail::real_fft(n_fft);
  std::vector<double> frame(n_fft, 0.0);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < window; ++i) frame[i] = signal[t * hop + i] * taper[i];
    fft.forward(frame, spec);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
    auto row = fm.row(t);
    bank.apply(power, row);
    for (double& v : row) {
      const double e = std::max(v, o.log_floor);
      v = o.log_base == LogBase::Ten ? std::log10(e) : std::log(e);
    }
  }
  return fm;
}

FeatureMatrix mfcc_from_log_mel(const FeatureMatrix& lm, int n_coeffs, const FeatureOptions& o) {
  if (lm.variant.base != BaseFeature::LogMel) {
    throw Error(Errc::InvalidArgument, "mfcc_from_log_mel expects a log mel matrix");
  }
  const std::size_t first = o.include_c0 ? 0 : 1;
  const auto n = static_cast<std::size_t>(n_coeffs);
  if (n_coeffs < 1 || first + n > lm.dims) {
    throw Error(Errc::InvalidArgument, "too many cepstral coefficients for the filterbank");
  }
  const auto basis = dct_basis(lm.dims, first + n);
  std::vector<double> lift(n, 1.0);
  if (lm.variant.hf_emphasis && o.lifter > 0.0) {
    auto w = lifter_weights(first + n, o.lifter);
    std::copy(w.begin() + static_cast<std::ptrdiff_t>(first), w.end(), lift.begin());
  }

  FeatureMatrix out;
  out.frames = lm.frames;
  out.dims = n;
  out.values.resize(lm.frames * n);
  out.variant = {n_coeffs == 22 ? BaseFeature::Mfcc22 : BaseFeature::Mfcc12,
                 lm.variant.hf_emphasis, false};
  for (std::size_t t = 0; t < lm.frames; ++t) {
    auto in = lm.row(t);
    auto dst = out.row(t);
    for (std::size_t k = 0; k < n; ++k) {
      const double* b = basis.data() + (first + k) * lm.dims;
      dst[k] = lift[k] * std::inner_product(in.begin(), in.end(), b, 0.0);
    }
  }
  return out;
}

FeatureMatrix mfcc(std::span<const double> waveform, double sample_rate_hz, int n_coeffs,
                   bool hf_emphasis, const FeatureOptions& options) {
  if (n_coeffs != 12 && n_coeffs != 22) {
    throw Error(Errc::InvalidArgument, "MFCC count must be 12 or 22");
  }
  return mfcc_from_log_mel(log_mel(waveform, sample_rate_hz, hf_emphasis, options), n_coeffs,
                           options);
}

FeatureMatrix extract_features(std::span<const double> waveform, double sample_rate_hz,
                               const FeatureVariant& variant, const FeatureOptions& options) {
  if (!variant.valid()) throw Error(Errc::InvalidArgument, "CMVN is only defined for MFCC bases");
  switch (variant.base) {
    case BaseFeature::LogMel:
      return log_mel(waveform, sample_rate_hz, variant.hf_emphasis, options);
    case BaseFeature::Mfcc12:
      return mfcc(waveform, sample_rate_hz, 12, variant.hf_emphasis, options);
    case BaseFeature::Mfcc22:
      return mfcc(waveform, sample_rate_hz, 22, variant.hf_emphasis, options);
  }
  throw Error(Errc::InvalidArgument, "unknown base feature");
}

void CmvnAccumulator::add(const FeatureMatrix& fm) {
  if (fm.frames == 0) {
    ++matrices_;
    return;
  }
  CmvnAccumulator one;
  one.dims_ = fm.dims;
  one.matrices_ = 1;
  one.frames_ = fm.frames;
  one.mean_.assign(fm.dims, 0.0);
  one.m2_.assign(fm.dims, 0.0);
  for (std::size_t t = 0; t < fm.frames; ++t) {
    auto r = fm.row(t);
    for (std::size_t d = 0; d < fm.dims; ++d) one.mean_[d] += r[d];
  }
  for (double& m : one.mean_) m /= static_cast<double>(fm.frames);
  for (std::size_t t = 0; t < fm.frames; ++t) {
    auto r = fm.row(t);
    for (std::size_t d = 0; d < fm.dims; ++d) {
      const double dev = r[d] - one.mean_[d];
      one.m2_[d] += dev * dev;
    }
  }
  merge(one);
}

void CmvnAccumulator::merge(const CmvnAccumulator& other) {
  if (other.frames_ == 0) {
    matrices_ += other.matrices_;
    return;
  }
  if (frames_ == 0) {
    const std::size_t m = matrices_;
    *this = other;
    matrices_ += m;
    return;
  }
  if (other.dims_ != dims_) {
    throw Error(Errc::DimsMismatch, "CMVN corpus mixes " + std::to_string(dims_) + " and " +
                                        std::to_string(other.dims_) + " dimensions");
  }
  const double na = static_cast<double>(frames_);
  const double nb = static_cast<double>(other.frames_);
  const double n = na + nb;
  for (std::size_t d = 0; d < dims_; ++d) {
    const double delta = other.mean_[d] - mean_[d];
    mean_[d] += delta * nb / n;
    m2_[d] += other.m2_[d] + delta * delta * na * nb / n;
  }
  frames_ += other.frames_;
  matrices_ += other.matrices_;
}

CmvnStats CmvnAccumulator::finish() const {
  if (frames_ < 2) {
    throw Error(Errc::EmptyCorpus, "CMVN needs at least two frames, have " + std::to_string(frames_));
  }
  CmvnStats s;
  s.mean = mean_;
  s.std.resize(dims_);
  for (std::size_t d = 0; d < dims_; ++d) {
    s.std[d] = std::max(std::sqrt(m2_[d] / static_cast<double>(frames_)), kCmvnStdFloor);
  }
  s.corpus_size = matrices_;
  s.frames = frames_;
  return s;
}

CmvnStats compute_cmvn_stats(std::span<const FeatureMatrix> corpus) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "CMVN corpus is empty");
  // Accumulate in a canonical order so the floating-point result does not
  // depend on how the corpus was ordered.
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = corpus[a];
    const auto& y = corpus[b];
    if (x.frames != y.frames) return x.frames < y.frames;
    return std::lexicographical_compare(x.values.begin(), x.values.end(), y.values.begin(),
                                        y.values.end());
  });
  CmvnAccumulator acc;
  for (std::size_t i : order) {
    if (i != order.front() && corpus[i].variant != corpus[order.front()].variant) {
      throw Error(Errc::DimsMismatch, "CMVN corpus mixes feature variants");
    }
    acc.add(corpus[i]);
  }
  return acc.finish();
}

FeatureMatrix apply_cmvn(const FeatureMatrix& fm, const CmvnStats& stats) {
  if (stats.mean.size() != fm.dims || stats.std.size() != fm.dims) {
    throw Error(Errc::DimsMismatch, "CMVN stats have " + std::to_string(stats.mean.size()) +
                                        " dims, matrix has " + std::to_string(fm.dims));
  }
  FeatureMatrix out = fm;
  for (std::size_t t = 0; t < fm.frames; ++t) {
    auto r = out.row(t);
    for (std::size_t d = 0; d < fm.dims; ++d) r[d] = (r[d] - stats.mean[d]) / stats.std[d];
  }
  out.variant.cmvn = true;
  return out;
}

FeatureMatrix invert_cmvn(const FeatureMatrix& fm, const CmvnStats& stats) {
  if (stats.mean.size() != fm.dims || stats.std.size() != fm.dims) {
    throw Error(Errc::DimsMismatch, "CMVN stats do not match matrix dims");
  }
  FeatureMatrix out = fm;
  for (std::size_t t = 0; t < fm.frames; ++t) {
    auto r = out.row(t);
    for (std::size_t d = 0; d < fm.dims; ++d) r[d] = r[d] * stats.std[d] + stats.mean[d];
  }
  out.variant.cmvn = false;
  return out;
}

nlohmann::json to_json(const FeatureVariant& v) {
  return {{"name", v.name()},
          {"base", to_string(v.base)},
          {"hf_emphasis", v.hf_emphasis},
          {"cmvn", v.cmvn}};
}

nlohmann::json to_json(const FeatureMatrix& fm) {
  return {{"variant", to_json(fm.variant)},
          {"frames", fm.frames},
          {"dims", fm.dims},
          {"values", fm.values}};
}

nlohmann::json to_json(const CmvnStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"corpus_size", s.corpus_size}, {"frames", s.frames}};
}

FeatureMatrix feature_matrix_from_json(const nlohmann::json& j) {
  try {
    FeatureMatrix fm;
    fm.variant = FeatureVariant::parse(j.at("variant").at("name").get<std::string>());
    fm.frames = j.at("frames").get<std::size_t>();
    fm.dims = j.at("dims").get<std::size_t>();
    fm.values = j.at("values").get<std::vector<double>>();
    if (fm.values.size() != fm.frames * fm.dims) {
      throw Error(Errc::SchemaError, "feature matrix value count does not match frames x dims");
    }
    return fm;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("feature matrix: ") + e.what());
  }
}

CmvnStats cmvn_stats_from_json(const nlohmann::json& j) {
  try {
    CmvnStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    s.corpus_size = j.value("corpus_size", std::size_t{0});
    s.frames = j.value("frames", std::size_t{0});
    if (s.mean.size() != s.std.size()) throw Error(Errc::SchemaError, "mean/std length differ");
    for (double v : s.std) {
      if (!(v > 0.0)) throw Error(Errc::SchemaError, "CMVN std must be positive");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("cmvn stats: ") + e.what());
  }
}

}  // namespace vocalfit
