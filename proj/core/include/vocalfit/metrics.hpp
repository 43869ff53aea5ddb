#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "vocalfit/features.hpp"

namespace vocalfit {

enum class Metric { Mse, Cosine, Manhattan, Chebyshev };

inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Mse, Metric::Cosine, Metric::Manhattan,
                                                   Metric::Chebyshev};

// "mse", "cos", "manhattan", "chebyshev"
std::string_view to_string(Metric metric) noexcept;
Metric metric_from_string(std::string_view name);

// How feature matrices are compared.
enum class Comparison {
  TimeAverage,  // distance between per-dimension frame means
  Framewise,    // mean of per-frame distances over the aligned frames
};

std::vector<double> reduce_static(const FeatureMatrix& fm);

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

double framewise_distance(const FeatureMatrix& a, const FeatureMatrix& b, Metric metric);

double compare(const FeatureMatrix& a, const FeatureMatrix& b, Metric metric,
               Comparison comparison);

}  // namespace vocalfit
