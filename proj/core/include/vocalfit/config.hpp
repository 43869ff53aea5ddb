#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vocalfit/acoustics.hpp"
#include "vocalfit/evaluation.hpp"
#include "vocalfit/features.hpp"
#include "vocalfit/metrics.hpp"
#include "vocalfit/pipeline.hpp"
#include "vocalfit/surface.hpp"
#include "vocalfit/targets.hpp"
#include "vocalfit/tract.hpp"

namespace vocalfit {

inline constexpr int kConfigSchemaVersion = 1;

std::string_view version() noexcept;

struct CampaignSettings {
  Model model = Model::Adult;
  int runs = 5;
  int steps = 4000;
  std::uint64_t seed = 1;
  bool write_shapes = true;
};

struct MushraSettings {
  std::uint64_t seed = 7;
  bool clip_upper = false;
  std::vector<std::string> pairs;  // empty: the default ten
};

// Everything the command-line tool can be configured with. JSON layout
// mirrors the nesting below; to_json(HarnessConfig{}) is the documented
// default file.
struct HarnessConfig {
  TractOptions tract;
  AcousticOptions acoustics;
  SynthesisOptions synthesis;
  LowFrequencyOptions low_frequency;
  RangeOptions ranges;
  CampaignSettings campaign;
  FeatureOptions features;
  Comparison comparison = Comparison::TimeAverage;
  TargetOptions targets;
  GridSpec surface;
  MushraSettings mushra;
  unsigned jobs = 0;
};

nlohmann::json to_json(const HarnessConfig& config);

// Missing keys keep their defaults. ConfigError for unknown keys, wrong value
// types, and values that fail validation.
HarnessConfig config_from_json(const nlohmann::json& j);
HarnessConfig load_config(const std::filesystem::path& path);

// "section.key=value"; the value is parsed as JSON when possible and taken
// as a string otherwise.
void apply_override(HarnessConfig& config, std::string_view assignment);

void validate(const HarnessConfig& config);

CampaignConfig campaign_config(const HarnessConfig& config, const std::filesystem::path& out_dir);
EvaluationOptions evaluation_options(const HarnessConfig& config);

// Writes <dir>/config.json.
void write_config_echo(const HarnessConfig& config, const std::filesystem::path& dir);

}  // namespace vocalfit
