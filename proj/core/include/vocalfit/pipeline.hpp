#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vocalfit/acoustics.hpp"
#include "vocalfit/tract.hpp"

namespace vocalfit {

struct FormantRange {
  double f1_min_hz = 150.0;
  double f1_max_hz = 1100.0;
  double f2_min_hz = 500.0;
  double f2_max_hz = 3000.0;

  bool valid() const noexcept { return f1_min_hz < f1_max_hz && f2_min_hz < f2_max_hz; }
  FormantRange scaled(double factor) const noexcept {
    return {f1_min_hz * factor, f1_max_hz * factor, f2_min_hz * factor, f2_max_hz * factor};
  }
};

struct RangeOptions {
  FormantRange adult;
  double child_scale = 1.3;

  FormantRange for_model(Model model) const noexcept {
    return model == Model::Child ? adult.scaled(child_scale) : adult;
  }
};

// Closed intervals.
bool formant_postfilter(const FormantPoint& fp, const FormantRange& range) noexcept;

struct StageFlags {
  bool prefilter = false;
  bool formants = false;       // transfer function computed and two peaks found
  bool formant_range = false;
  bool synthesized = false;
  bool low_frequency = false;

  bool retained() const noexcept {
    return prefilter && formants && formant_range && synthesized && low_frequency;
  }
};

struct CandidateRecord {
  VocalTractShape shape;
  std::optional<FormantPoint> formants;
  std::string wav;  // relative to the dataset directory; empty unless synthesized
  StageFlags pass;
  std::string failure;  // first failing stage's diagnostic
};

struct CampaignConfig {
  Model model = Model::Adult;
  int runs = 5;
  int steps = 4000;
  std::uint64_t seed = 1;
  TractOptions tract;
  AcousticOptions acoustics;
  SynthesisOptions synthesis;
  LowFrequencyOptions low_frequency;
  RangeOptions ranges;
  std::filesystem::path out_dir;
  unsigned jobs = 0;
  bool write_shapes = true;
};

struct DatasetSummary {
  Model model = Model::Adult;
  int runs = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  double sample_rate_hz = 0.0;
  FormantRange range;
  std::size_t attempted = 0;
  std::size_t pass_prefilter = 0;
  std::size_t pass_formant = 0;
  std::size_t retained = 0;
  double retention_pct = 0.0;
  // Breakdown of candidates that passed the prefilter but not the next stage.
  std::size_t failed_transfer = 0;
  std::size_t failed_peaks = 0;
  std::size_t failed_range = 0;
  std::size_t failed_low_frequency = 0;
};

nlohmann::json to_json(const DatasetSummary& summary);
DatasetSummary summary_from_json(const nlohmann::json& j);

// Runs every stage on one shape. When the candidate reaches synthesis the
// waveform is stored in *audio (if non-null). Acoustic failures are recorded
// in the record, never thrown.
CandidateRecord process_candidate(const VocalTractShape& shape, const CampaignConfig& config,
                                  std::vector<double>* audio = nullptr);

// Writes into config.out_dir:
//   dataset.jsonl  retained rows {run_id, step_id, params, f1_hz, f2_hz, wav}
//   shapes.jsonl   every attempted shape (optional)
//   summary.json   stage counts
//   wav/           one 16-bit PCM file per retained candidate
// Output is identical for identical configs regardless of `jobs`.
DatasetSummary run_campaign(const CampaignConfig& config);

struct DatasetRow {
  int run_id = 0;
  int step_id = 0;
  ParamVector params{};
  FormantPoint formants;
  std::string wav;
};

nlohmann::json to_json(const DatasetRow& row);
DatasetRow dataset_row_from_json(const nlohmann::json& j);

struct Dataset {
  std::filesystem::path dir;
  DatasetSummary summary;
  std::vector<DatasetRow> rows;

  std::filesystem::path audio_path(const DatasetRow& row) const { return dir / row.wav; }
};

// Loads summary.json and dataset.jsonl, re-checking every row's formants
// against the summary's range (SchemaError on violation).
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace vocalfit
