#include "vocalfit/tract.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "rng.hpp"
#include "vocalfit/error.hpp"

namespace vocalfit {

std::string_view to_string(Model model) noexcept {
  return model == Model::Child ? "child" : "adult";
}

Model model_from_string(std::string_view name) {
  if (name == "adult") return Model::Adult;
  if (name == "child") return Model::Child;
  throw Error(Errc::InvalidArgument, "unknown model '" + std::string(name) + "'");
}

const std::array<ParamRange, kNumParams>& param_ranges() noexcept {
  static const std::array<ParamRange, kNumParams> ranges{{
      {"jaw_opening", 0.0, 1.0},
      {"tongue_position", 0.15, 0.9},
      {"tongue_degree", 0.0, 1.0},
      {"tongue_height", 0.0, 1.0},
      {"lip_area_cm2", 0.05, 4.0},
      {"lip_protrusion_cm", 0.0, 2.0},
      {"pharynx_width", 0.5, 1.5},
      {"velum", 0.0, 1.0},
  }};
  return ranges;
}

ParamVector neutral_params() noexcept {
  ParamVector p{};
  const auto& r = param_ranges();
  for (std::size_t i = 0; i < kNumParams; ++i) p[i] = 0.5 * (r[i].lo + r[i].hi);
  return p;
}

bool params_in_range(const ParamVector& params) noexcept {
  const auto& r = param_ranges();
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (!(params[i] >= r[i].lo && params[i] <= r[i].hi)) return false;
  }
  return true;
}

AreaFunction AreaFunction::from_sections(std::vector<TubeSection> sections) {
  if (sections.empty()) throw Error(Errc::InvalidArgument, "area function has no sections");
  AreaFunction af;
  for (const auto& s : sections) {
    if (!(s.area_cm2 >= 0.0) || !std::isfinite(s.area_cm2)) {
      throw Error(Errc::InvalidArgument, "section area must be finite and non-negative");
    }
    if (!(s.length_cm > 0.0) || !std::isfinite(s.length_cm)) {
      throw Error(Errc::InvalidArgument, "section length must be positive");
    }
    af.total_length_cm += s.length_cm;
  }
  af.sections = std::move(sections);
  return af;
}

double AreaFunction::min_area_cm2() const noexcept {
  double m = sections.empty() ? 0.0 : sections.front().area_cm2;
  for (const auto& s : sections) m = std::min(m, s.area_cm2);
  return m;
}

std::size_t AreaFunction::min_area_index() const noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sections.size(); ++i) {
    if (sections[i].area_cm2 < sections[best].area_cm2) best = i;
  }
  return best;
}

namespace {

double smoothstep(double a, double b, double x) {
  double t = std::clamp((x - a) / (b - a), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Coupling constants of the surrogate geometry.
constexpr double kJawFront = 1.0;
constexpr double kHeightOralUp = 4.0;
constexpr double kHeightOralDown = 1.2;
constexpr double kHeightPharynx = 1.2;
constexpr double kDegreeGain = 3.0;
constexpr double kConstrictionWidth = 0.12;
constexpr double kWidening = 4.0;
constexpr double kJawLip = 1.8;

}  // namespace

AreaFunction params_to_area(const ParamVector& p, double length_scale, double area_scale) {
  if (!params_in_range(p)) throw Error(Errc::InvalidArgument, "shape parameter out of range");
  if (!(length_scale > 0.0) || !(area_scale > 0.0)) {
    throw Error(Errc::InvalidArgument, "scale factors must be positive");
  }
  const double jaw = at(p, Param::JawOpening);
  const double pos = at(p, Param::TonguePosition);
  const double degree = at(p, Param::TongueDegree);
  const double height = at(p, Param::TongueHeight);
  const double lip = at(p, Param::LipArea);
  const double protrusion = at(p, Param::LipProtrusion);
  const double pharynx = at(p, Param::PharynxWidth);

  const double length = geometry::kFixedLengthCm + protrusion;
  const double j = 2.0 * jaw - 1.0;
  const double h = 2.0 * height - 1.0;
  const double oral_gain = h > 0.0 ? kHeightOralUp : kHeightOralDown;
  const double c = std::clamp(kDegreeGain * (2.0 * degree - 1.0), -1.0, 1.0);
  const double log_floor = std::log(geometry::kClosureFloorCm2);
  const double lip_length = 0.5 + 0.75 * protrusion;
  const double lip_start = 1.0 - lip_length / length;
  const double lip_eff =
      std::max(lip * (1.0 + kJawLip * (jaw - 0.5)), geometry::kClosureFloorCm2);

  std::vector<TubeSection> sections(kNumSections);
  for (std::size_t i = 0; i < kNumSections; ++i) {
    const double x = (static_cast<double>(i) + 0.5) / kNumSections;
    const double w_pharynx = 1.0 - smoothstep(0.3, 0.5, x);
    const double w_oral = smoothstep(0.4, 0.6, x);
    const double w_front = smoothstep(0.55, 0.85, x);

    double la = std::log(geometry::kNeutralAreaCm2);
    la += kJawFront * j * w_front;
    la += -oral_gain * h * w_oral + kHeightPharynx * h * w_pharynx;
    la += std::log(pharynx) * w_pharynx;

    const double u = (x - pos) / kConstrictionWidth;
    const double g = std::exp(-u * u);
    if (c >= 0.0) {
      la = (1.0 - c * g) * la + c * g * log_floor;
    } else {
      la += -c * g * std::log(kWidening);
    }

    const double w_lip = smoothstep(lip_start - 0.03, lip_start + 0.03, x);
    la = (1.0 - w_lip) * la + w_lip * std::log(lip_eff);

    sections[i] = {std::exp(la) * area_scale, length / kNumSections * length_scale};
  }
  AreaFunction area = AreaFunction::from_sections(std::move(sections));
  area.total_length_cm = length * length_scale;
  return area;
}

AreaFunction shape_to_area(const VocalTractShape& shape, const TractOptions& options) {
  if (shape.model == Model::Child) {
    return params_to_area(shape.params, options.child_length_scale, options.child_area_scale);
  }
  return params_to_area(shape.params, 1.0, 1.0);
}

std::vector<VocalTractShape> sample_run(Model model, int run_id, int steps, std::uint64_t seed,
                                        const TractOptions& options) {
  if (run_id < 0) throw Error(Errc::InvalidArgument, "run_id must be non-negative");
  if (steps < 0) throw Error(Errc::InvalidArgument, "steps must be non-negative");
  const auto& ranges = param_ranges();
  detail::Rng rng{seed, static_cast<std::uint64_t>(run_id)};

  std::vector<VocalTractShape> out;
  out.reserve(static_cast<std::size_t>(steps));
  ParamVector p = neutral_params();
  for (int t = 0; t < steps; ++t) {
    out.push_back({p, model, run_id, t});
    for (std::size_t k = 0; k < kNumParams; ++k) {
      const double span = ranges[k].hi - ranges[k].lo;
      double v;
      if (options.sampling == SamplingMode::Uniform) {
        v = ranges[k].lo + rng.uniform() * span;
      } else {
        v = p[k] + rng.normal() * options.walk_sigma * span;
      }
      p[k] = std::clamp(v, ranges[k].lo, ranges[k].hi);
    }
  }
  return out;
}

std::vector<VocalTractShape> sample_walk(Model model, int n_runs, int steps_per_run,
                                         std::uint64_t seed, const TractOptions& options) {
  if (n_runs < 1) throw Error(Errc::InvalidArgument, "n_runs must be at least 1");
  if (steps_per_run < 0) throw Error(Errc::InvalidArgument, "steps must be non-negative");
  std::vector<VocalTractShape> out;
  out.reserve(static_cast<std::size_t>(n_runs) * static_cast<std::size_t>(steps_per_run));
  for (int r = 0; r < n_runs; ++r) {
    auto run = sample_run(model, r, steps_per_run, seed, options);
    out.insert(out.end(), run.begin(), run.end());
  }
  return out;
}

bool prefilter_shape(const AreaFunction& area, const TractOptions& options) {
  return !area.sections.empty() && area.min_area_cm2() >= options.closure_threshold_cm2;
}

nlohmann::json shape_to_json(const VocalTractShape& shape) {
  return {{"model", to_string(shape.model)},
          {"run_id", shape.run_id},
          {"step_id", shape.step_id},
          {"params", shape.params}};
}

VocalTractShape shape_from_json(const nlohmann::json& row) {
  try {
    VocalTractShape s;
    s.model = model_from_string(row.at("model").get<std::string>());
    s.run_id = row.at("run_id").get<int>();
    s.step_id = row.at("step_id").get<int>();
    const auto& params = row.at("params");
    if (!params.is_array() || params.size() != kNumParams) {
      throw Error(Errc::SchemaError, "params must hold 8 numbers");
    }
    for (std::size_t i = 0; i < kNumParams; ++i) s.params[i] = params[i].get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("shape row: ") + e.what());
  }
}

}  // namespace vocalfit
