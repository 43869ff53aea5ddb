#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vocalfit/features.hpp"
#include "vocalfit/formant_space.hpp"
#include "vocalfit/metrics.hpp"
#include "vocalfit/pipeline.hpp"
#include "vocalfit/targets.hpp"

namespace vocalfit {

struct PairId {
  FeatureVariant variant;
  Metric metric = Metric::Mse;

  // "<variant>-<metric>", e.g. "mfcc12-norm-cos".
  std::string name() const;
  static PairId parse(std::string_view name);

  friend bool operator==(const PairId&, const PairId&) = default;
};

// All 40 combinations, variants in enumerate_variants() order, metrics inner.
std::vector<PairId> enumerate_pairs();

struct OptimizationResult {
  PairId pair;
  Model model = Model::Adult;
  Vowel vowel = Vowel::A;
  int run_id = 0;
  int best_step_id = 0;
  std::string best_wav;  // absolute path of the selected candidate's audio
  FormantPoint best_formants;
  double feature_error = 0.0;
  ZPoint candidate_z;
  ZPoint target_z;
  double formant_error_z = 0.0;
};

nlohmann::json to_json(const OptimizationResult& result);
OptimizationResult result_from_json(const nlohmann::json& j);
void write_results_jsonl(const std::filesystem::path& path,
                         std::span<const OptimizationResult> results);
std::vector<OptimizationResult> read_results_jsonl(const std::filesystem::path& path);

struct EvaluationOptions {
  FeatureOptions features;
  Comparison comparison = Comparison::TimeAverage;
  unsigned jobs = 0;
};

// Comparison-ready features of every dataset candidate and every target for
// one variant. With cmvn the statistics are pooled over the dataset's frames
// and applied to both sides.
class FeatureBank {
 public:
  static FeatureBank build(const Dataset& dataset, const TargetSet& targets,
                           const FeatureVariant& variant, const EvaluationOptions& options);

  // Same, for several variants sharing one pass over the audio.
  static std::vector<FeatureBank> build_many(const Dataset& dataset, const TargetSet& targets,
                                             std::span<const FeatureVariant> variants,
                                             const EvaluationOptions& options);

  const FeatureVariant& variant() const noexcept { return variant_; }
  const std::optional<CmvnStats>& cmvn() const noexcept { return cmvn_; }
  std::size_t size() const noexcept { return candidates_.size(); }

  // Feature error of dataset row `candidate` against a target vowel.
  double error(std::size_t candidate, Vowel vowel, Metric metric) const;

  // Target features scaled by `factor` (cosine invariance checks).
  void scale_targets(double factor);

 private:
  FeatureVariant variant_;
  Comparison comparison_ = Comparison::TimeAverage;
  std::optional<CmvnStats> cmvn_;
  std::vector<FeatureMatrix> candidates_;  // one frame (the mean) in TimeAverage mode
  std::vector<FeatureMatrix> targets_;     // indexed by Vowel
};

// For every run split and vowel, the dataset row minimising the feature error
// (ties to the lowest step), with its z-space formant error. Formant data
// never enters the selection. EmptyRun if a run has no candidates.
std::vector<OptimizationResult> optimize_pair(const Dataset& dataset, const TargetSet& targets,
                                              const FeatureBank& bank, Metric metric,
                                              const SpeakerFormantStats& model_stats);

// Convenience form that builds the bank.
std::vector<OptimizationResult> optimize_pair(const Dataset& dataset, const TargetSet& targets,
                                              const FeatureVariant& variant, Metric metric,
                                              const EvaluationOptions& options = {});

SpeakerFormantStats dataset_formant_stats(const Dataset& dataset);

// All requested pairs; results ordered by (pair order, vowel, run).
std::vector<OptimizationResult> evaluate_dataset(const Dataset& dataset, const TargetSet& targets,
                                                 std::span<const PairId> pairs,
                                                 const EvaluationOptions& options = {});

struct HfImpactRow {
  Model model;
  BaseFeature base;
  double mean_hf_off;
  double mean_hf_on;
  std::size_t n_off;
  std::size_t n_on;
};

struct MetricImpactRow {
  Model model;
  Metric metric;
  double mean_error;
  std::size_t n;
};

struct FeatureImpactRow {
  Model model;
  Vowel vowel;
  BaseFeature base;
  double mean_error;
  std::size_t n;
};

struct ReportAnnotation {
  Model model;
  // Observed directions for the two headline claims; informational only.
  bool hf_increases_error;
  bool mse_smallest;
};

struct ImpactReport {
  std::vector<HfImpactRow> hf_impact;
  std::vector<MetricImpactRow> metric_impact;
  std::vector<FeatureImpactRow> feature_impact;
  std::vector<ReportAnnotation> annotations;

  nlohmann::json to_json() const;
  // report.json plus hf_impact.csv, metric_impact.csv, feature_impact.csv.
  void write(const std::filesystem::path& dir) const;
};

// Means of formant_error_z:
//  hf_impact      by model x base, HF on vs off, over all vowels, metrics,
//                 normalisation settings and runs
//  metric_impact  by model x metric, plain variants only (no HF, no CMVN)
//  feature_impact by model x vowel x base, plain variants, all metrics
// IncompleteGrid (listing the missing pairs) unless every model present has
// all 40 pairs.
ImpactReport aggregate_report(std::span<const OptimizationResult> results);

}  // namespace vocalfit
