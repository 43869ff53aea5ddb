#include "vocalfit/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "vocalfit/error.hpp"
#include "vocalfit/triangulation.hpp"

namespace vocalfit {

namespace fs = std::filesystem;

int GridSpec::index(double z) const noexcept {
  if (!(z >= lo && z <= hi)) return -1;
  if (z == hi) return bins - 1;
  // Multiply before dividing so centre-aligned values such as 0 land exactly.
  const int i = static_cast<int>(std::floor((z - lo) * bins / (hi - lo)));
  return std::clamp(i, 0, bins - 1);
}

ErrorSurfaceGrid bin_errors(std::span<const SurfaceSample> samples,
                            const SurfaceDescriptor& descriptor, const ZPoint& target,
                            const GridSpec& spec) {
  if (spec.bins < 1 || !(spec.hi > spec.lo)) throw Error(Errc::InvalidArgument, "invalid grid spec");
  if (samples.empty()) throw Error(Errc::NoSamples, "no error samples");
  for (const auto& s : samples) {
    if (!std::isfinite(s.error) || s.error < 0.0) {
      throw Error(Errc::InvalidArgument, "errors must be finite and non-negative");
    }
  }

  ErrorSurfaceGrid g;
  g.spec = spec;
  g.descriptor = descriptor;
  g.target_marker = target;
  g.samples = samples.size();
  const std::size_t cells = static_cast<std::size_t>(spec.bins) * spec.bins;
  g.values.assign(cells, 0.0);
  g.second_moment.assign(cells, 0.0);
  g.counts.assign(cells, 0);

  std::size_t best = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].error < samples[best].error) best = i;
  }
  g.minimum_marker = {samples[best].z1, samples[best].z2};

  std::vector<std::pair<std::size_t, double>> kept;
  kept.reserve(samples.size());
  for (const auto& s : samples) {
    const int r = spec.index(s.z1);
    const int c = spec.index(s.z2);
    if (r < 0 || c < 0) {
      ++g.dropped;
      continue;
    }
    kept.emplace_back(g.offset(r, c), s.error);
    g.max_error = std::max(g.max_error, s.error);
  }
  if (kept.empty()) {
    throw Error(Errc::AllOutsideRange, "all " + std::to_string(samples.size()) +
                                           " samples fall outside the grid");
  }
  if (!(g.max_error > 0.0)) throw Error(Errc::InvalidArgument, "maximum error is zero");

  for (const auto& [cell, err] : kept) {
    const double e = err / g.max_error;
    g.values[cell] += e;
    g.second_moment[cell] += e * e;
    ++g.counts[cell];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < cells; ++k) {
    if (g.counts[k] == 0) {
      g.values[k] = nan;
      g.second_moment[k] = nan;
    } else {
      g.values[k] /= static_cast<double>(g.counts[k]);
      g.second_moment[k] /= static_cast<double>(g.counts[k]);
    }
  }
  return g;
}

void fill_empty_bins(ErrorSurfaceGrid& grid) {
  const int n = grid.spec.bins;
  std::vector<LatticePoint> pts;
  std::vector<double> vals;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!grid.empty(r, c)) {
        pts.push_back({r, c});
        vals.push_back(grid.at(r, c));
      }
    }
  }
  grid.fill = {};
  if (pts.size() == static_cast<std::size_t>(n) * n) return;
  if (pts.empty()) throw Error(Errc::NoSamples, "grid has no populated bins");

  auto nearest = [&](int r, int c) {
    std::size_t best = 0;
    long best_d = -1;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const long dr = pts[k].x - r, dc = pts[k].y - c;
      const long d = dr * dr + dc * dc;
      if (best_d < 0 || d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return vals[best];
  };

  const bool cubic = pts.size() >= 4 && !all_collinear(pts);
  grid.fill.method = cubic ? FillMethod::CloughTocher : FillMethod::NearestFallback;
  std::optional<DelaunayTriangulation> tri;
  std::optional<CloughTocherInterpolator> ct;
  // Interpolate offsets from one populated value so a constant field comes
  // back exactly.
  const double ref = vals.front();
  if (cubic) {
    std::vector<double> offsets(vals.size());
    for (std::size_t k = 0; k < vals.size(); ++k) offsets[k] = vals[k] - ref;
    tri.emplace(pts);
    ct.emplace(*tri, offsets, estimate_gradients(*tri, offsets));
  }

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (!grid.empty(r, c)) continue;
      std::optional<double> v;
      if (ct) v = (*ct)(r, c);
      if (v && std::isfinite(*v)) {
        *v += ref;
        ++grid.fill.interpolated;
      } else {
        v = nearest(r, c);
        ++grid.fill.extrapolated;
      }
      grid.values[grid.offset(r, c)] = std::clamp(*v, 0.0, 1.0);
    }
  }
}

ErrorSurfaceGrid build_surface(std::span<const SurfaceSample> samples,
                               const SurfaceDescriptor& descriptor, const ZPoint& target,
                               const GridSpec& spec) {
  auto g = bin_errors(samples, descriptor, target, spec);
  fill_empty_bins(g);
  return g;
}

namespace {

std::string_view to_string(FillMethod m) {
  switch (m) {
    case FillMethod::None: return "none";
    case FillMethod::CloughTocher: return "clough_tocher";
    case FillMethod::NearestFallback: return "nearest_fallback";
  }
  return "none";
}

}  // namespace

nlohmann::json surface_sidecar(const ErrorSurfaceGrid& g) {
  const int n = g.spec.bins;
  nlohmann::json counts = nlohmann::json::array();
  nlohmann::json moments = nlohmann::json::array();
  for (int r = 0; r < n; ++r) {
    nlohmann::json crow = nlohmann::json::array();
    nlohmann::json mrow = nlohmann::json::array();
    for (int c = 0; c < n; ++c) {
      crow.push_back(g.counts[g.offset(r, c)]);
      const double m = g.second_moment[g.offset(r, c)];
      mrow.push_back(std::isfinite(m) ? nlohmann::json(m) : nlohmann::json(nullptr));
    }
    counts.push_back(std::move(crow));
    moments.push_back(std::move(mrow));
  }
  return {{"variant", g.descriptor.variant},
          {"metric", g.descriptor.metric},
          {"vowel", g.descriptor.vowel},
          {"model", g.descriptor.model},
          {"grid", {{"bins", n}, {"lo", g.spec.lo}, {"hi", g.spec.hi}}},
          {"orientation", "rows: z1 (F1) ascending; columns: z2 (F2) ascending"},
          {"minimum_marker", {{"z1", g.minimum_marker.z1}, {"z2", g.minimum_marker.z2}}},
          {"target_marker", {{"z1", g.target_marker.z1}, {"z2", g.target_marker.z2}}},
          {"samples", g.samples},
          {"dropped", g.dropped},
          {"max_error", g.max_error},
          {"fill",
           {{"method", to_string(g.fill.method)},
            {"interpolated", g.fill.interpolated},
            {"extrapolated", g.fill.extrapolated}}},
          {"counts", counts},
          {"second_moment", moments}};
}

void export_surface(const ErrorSurfaceGrid& g, const fs::path& dir, const std::string& stem) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string());

  std::ostringstream csv;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", g.spec.lo);
  std::string lo = buf;
  std::snprintf(buf, sizeof buf, "%g", g.spec.hi);
  std::string hi = buf;
  csv << "# " << g.descriptor.model << " /" << g.descriptor.vowel << "/ " << g.descriptor.variant
      << "-" << g.descriptor.metric << "\n";
  csv << "# rows: z1 (F1) from " << lo << " (top) to " << hi << "; columns: z2 (F2) from " << lo
      << " to " << hi << "\n";
  const int n = g.spec.bins;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", g.at(r, c));
      csv << (c ? "," : "") << buf;
    }
    csv << "\n";
  }

  std::ofstream f(dir / (stem + ".csv"), std::ios::binary | std::ios::trunc);
  f << csv.str();
  if (!f) throw Error(Errc::IoError, "failed writing " + stem + ".csv");
  std::ofstream j(dir / (stem + ".json"), std::ios::binary | std::ios::trunc);
  j << surface_sidecar(g).dump(2) << '\n';
  if (!j) throw Error(Errc::IoError, "failed writing " + stem + ".json");
}

std::vector<double> read_surface_csv(const fs::path& path, int bins) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<double> out;
  std::string line;
  int rows = 0;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      out.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw Error(Errc::SchemaError, "bad surface value '" + cell + "'");
      ++cols;
    }
    if (cols != bins) throw Error(Errc::SchemaError, "surface row has " + std::to_string(cols) + " columns");
    ++rows;
  }
  if (rows != bins) throw Error(Errc::SchemaError, "surface has " + std::to_string(rows) + " rows");
  return out;
}

}  // namespace vocalfit
