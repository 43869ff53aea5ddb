#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace vocalfit {

enum class Model { Adult, Child };

std::string_view to_string(Model model) noexcept;
Model model_from_string(std::string_view name);

inline constexpr std::size_t kNumParams = 8;
inline constexpr std::size_t kNumSections = 40;

// Index of each articulatory parameter inside a ParamVector.
enum class Param : std::size_t {
  JawOpening = 0,      // [0, 1]
  TonguePosition = 1,  // constriction location as a fraction of tract length
  TongueDegree = 2,    // 0 widens, 0.5 neutral, high values close the tract
  TongueHeight = 3,    // [0, 1]
  LipArea = 4,         // cm^2
  LipProtrusion = 5,   // cm
  PharynxWidth = 6,    // multiplicative factor
  Velum = 7,           // carried for sampling, acoustically inert
};

struct ParamRange {
  std::string_view name;
  double lo;
  double hi;
};

using ParamVector = std::array<double, kNumParams>;

const std::array<ParamRange, kNumParams>& param_ranges() noexcept;

inline double& at(ParamVector& p, Param which) { return p[static_cast<std::size_t>(which)]; }
inline double at(const ParamVector& p, Param which) { return p[static_cast<std::size_t>(which)]; }

// Every parameter at the middle of its range: the schwa configuration.
ParamVector neutral_params() noexcept;
bool params_in_range(const ParamVector& params) noexcept;

struct VocalTractShape {
  ParamVector params = neutral_params();
  Model model = Model::Adult;
  int run_id = 0;
  int step_id = 0;

  friend bool operator==(const VocalTractShape&, const VocalTractShape&) = default;
};

struct TubeSection {
  double area_cm2;
  double length_cm;
};

// Tube sections ordered from the glottis to the lips.
struct AreaFunction {
  std::vector<TubeSection> sections;
  double total_length_cm = 0.0;

  // Builds the function and fills total_length_cm; throws InvalidArgument on
  // an empty list, negative areas or non-positive lengths.
  static AreaFunction from_sections(std::vector<TubeSection> sections);

  double min_area_cm2() const noexcept;
  std::size_t min_area_index() const noexcept;
};

enum class SamplingMode { RandomWalk, Uniform };

struct TractOptions {
  double child_length_scale = 0.7;
  double child_area_scale = 0.75;
  double closure_threshold_cm2 = 0.1;
  // Walk step standard deviation as a fraction of each parameter's range.
  double walk_sigma = 0.1;
  SamplingMode sampling = SamplingMode::RandomWalk;
};

// Area-function geometry constants. Exposed so tests and docs can refer to
// the same numbers the model uses.
namespace geometry {
inline constexpr double kNeutralAreaCm2 = 2.5;
inline constexpr double kClosureFloorCm2 = 0.005;
inline constexpr double kFixedLengthCm = 16.5;  // plus lip protrusion
}  // namespace geometry

// Deterministic parameter-to-geometry mapping. Child shapes are the adult
// geometry with lengths and areas scaled by the options.
AreaFunction shape_to_area(const VocalTractShape& shape, const TractOptions& options = {});

// Adult geometry with explicit scale factors; used for the child model and the
// synthetic target speaker.
AreaFunction params_to_area(const ParamVector& params, double length_scale, double area_scale);

// n_runs x steps_per_run shapes ordered by (run_id, step_id). Each run starts
// at the neutral shape and draws from its own substream of `seed`.
std::vector<VocalTractShape> sample_walk(Model model, int n_runs, int steps_per_run,
                                         std::uint64_t seed, const TractOptions& options = {});

// One run of sample_walk; sample_walk is the concatenation of sample_run over
// run ids, so runs can be generated independently.
std::vector<VocalTractShape> sample_run(Model model, int run_id, int steps, std::uint64_t seed,
                                        const TractOptions& options = {});

// False when the tract is occluded: some section is narrower than the closure
// threshold (the threshold itself passes).
bool prefilter_shape(const AreaFunction& area, const TractOptions& options = {});

// JSONL row {model, run_id, step_id, params}.
nlohmann::json shape_to_json(const VocalTractShape& shape);
VocalTractShape shape_from_json(const nlohmann::json& row);

}  // namespace vocalfit
