#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vocalfit/formant_space.hpp"

namespace vocalfit {

struct SurfaceSample {
  double z1;
  double z2;
  double error;
};

// Uniform bins over [lo, hi] per axis. Bins are half-open [a, b) except the
// last, which also takes z == hi.
struct GridSpec {
  int bins = 30;
  double lo = -3.0;
  double hi = 3.0;

  double width() const noexcept { return (hi - lo) / bins; }
  double center(int index) const noexcept { return lo + (index + 0.5) * width(); }
  // -1 outside [lo, hi].
  int index(double z) const noexcept;
};

struct SurfaceDescriptor {
  std::string variant;
  std::string metric;
  std::string vowel;
  std::string model;
};

enum class FillMethod {
  None,               // nothing was empty
  CloughTocher,       // cubic inside the hull, nearest bin outside
  NearestFallback,    // too few non-collinear bins for the cubic scheme
};

struct FillReport {
  FillMethod method = FillMethod::None;
  std::size_t interpolated = 0;
  std::size_t extrapolated = 0;
};

// Row-major grid: row = z1 bin, column = z2 bin.
struct ErrorSurfaceGrid {
  GridSpec spec;
  SurfaceDescriptor descriptor;
  std::vector<double> values;         // mean scaled error; NaN marks an empty bin
  std::vector<std::size_t> counts;
  std::vector<double> second_moment;  // mean squared scaled error; NaN when empty
  ZPoint minimum_marker;              // unbinned argmin sample
  ZPoint target_marker;
  std::size_t samples = 0;
  std::size_t dropped = 0;            // outside [lo, hi]^2
  double max_error = 0.0;
  FillReport fill;

  std::size_t offset(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * spec.bins + col;
  }
  double at(int row, int col) const { return values[offset(row, col)]; }
  bool empty(int row, int col) const { return counts[offset(row, col)] == 0; }
};

// Scales errors by the largest in-range error and averages per bin; empty
// bins stay NaN. NoSamples / AllOutsideRange / InvalidArgument (max error 0).
ErrorSurfaceGrid bin_errors(std::span<const SurfaceSample> samples,
                            const SurfaceDescriptor& descriptor, const ZPoint& target,
                            const GridSpec& spec = {});

// Fills empty bins: piecewise-cubic (Clough-Tocher) inside the convex hull of
// the non-empty bin centres, nearest non-empty bin outside it. Non-empty bins
// are untouched; results are clamped to [0, 1].
void fill_empty_bins(ErrorSurfaceGrid& grid);

// bin_errors followed by fill_empty_bins.
ErrorSurfaceGrid build_surface(std::span<const SurfaceSample> samples,
                               const SurfaceDescriptor& descriptor, const ZPoint& target,
                               const GridSpec& spec = {});

// <dir>/<stem>.csv (bins x bins values) and <dir>/<stem>.json (markers,
// descriptors, counts, fill metadata). Byte-stable for identical grids.
void export_surface(const ErrorSurfaceGrid& grid, const std::filesystem::path& dir,
                    const std::string& stem);

nlohmann::json surface_sidecar(const ErrorSurfaceGrid& grid);

// Values from an exported CSV, row-major.
std::vector<double> read_surface_csv(const std::filesystem::path& path, int bins = 30);

}  // namespace vocalfit
