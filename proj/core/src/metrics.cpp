#include "vocalfit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "vocalfit/error.hpp"

namespace vocalfit {

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::Mse: return "mse";
    case Metric::Cosine: return "cos";
    case Metric::Manhattan: return "manhattan";
    case Metric::Chebyshev: return "chebyshev";
  }
  return "mse";
}

Metric metric_from_string(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  throw Error(Errc::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

std::vector<double> reduce_static(const FeatureMatrix& fm) {
  if (fm.frames == 0) throw Error(Errc::InvalidArgument, "cannot average zero frames");
  std::vector<double> mean(fm.dims, 0.0);
  for (std::size_t t = 0; t < fm.frames; ++t) {
    auto r = fm.row(t);
    for (std::size_t d = 0; d < fm.dims; ++d) mean[d] += r[d];
  }
  for (double& v : mean) v /= static_cast<double>(fm.frames);
  return mean;
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimsMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " dimensions");
  }
  const std::size_t n = a.size();
  switch (metric) {
    case Metric::Mse: {
      if (n == 0) return 0.0;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
      }
      return acc / static_cast<double>(n);
    }
    case Metric::Cosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      const double norm = std::sqrt(na) * std::sqrt(nb);
      if (!(norm > 0.0)) throw Error(Errc::ZeroVector, "cosine distance of a zero vector");
      // Rounding can push the ratio a hair past 1.
      return std::max(0.0, 1.0 - dot / norm);
    }
    case Metric::Manhattan: {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += std::abs(a[i] - b[i]);
      return acc;
    }
    case Metric::Chebyshev: {
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
      return m;
    }
  }
  throw Error(Errc::InvalidArgument, "unknown metric");
}

double framewise_distance(const FeatureMatrix& a, const FeatureMatrix& b, Metric metric) {
  if (a.dims != b.dims) throw Error(Errc::DimsMismatch, "feature matrices differ in dims");
  const std::size_t frames = std::min(a.frames, b.frames);
  if (frames == 0) throw Error(Errc::InvalidArgument, "no aligned frames");
  double acc = 0.0;
  for (std::size_t t = 0; t < frames; ++t) acc += distance(a.row(t), b.row(t), metric);
  return acc / static_cast<double>(frames);
}

double compare(const FeatureMatrix& a, const FeatureMatrix& b, Metric metric,
               Comparison comparison) {
  if (comparison == Comparison::Framewise) return framewise_distance(a, b, metric);
  return distance(reduce_static(a), reduce_static(b), metric);
}

}  // namespace vocalfit
