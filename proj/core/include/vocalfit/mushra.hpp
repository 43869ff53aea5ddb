#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vocalfit/evaluation.hpp"

namespace vocalfit {

enum class StimulusRole { Reference, HiddenReference, Anchor, Candidate };

std::string_view to_string(StimulusRole role) noexcept;  // reference|hidden_reference|anchor|candidate
StimulusRole stimulus_role_from_string(std::string_view name);

struct Stimulus {
  std::string id;
  std::string wav;
  StimulusRole role = StimulusRole::Candidate;
  std::optional<std::string> pair;
};

// One MUSHRA screen. stimuli[0] is the visible reference; the rest are rated
// and appear in shuffled order.
struct TrialManifest {
  std::string screen_id;
  Model model = Model::Adult;
  Vowel vowel = Vowel::A;
  std::vector<Stimulus> stimuli;
  std::uint64_t seed = 0;

  std::size_t rated_count() const noexcept;
  const Stimulus* find(std::string_view stimulus_id) const noexcept;
};

// The ten pairs used for the listening test.
std::vector<PairId> listening_test_pairs();

// One screen per (model, vowel) present in `results`, models then vowels in
// order. Each selected pair contributes its lowest-error selection across
// runs; the hidden reference is the target recording and the anchor is the
// first selected pair's choice for the target vowel farthest from the
// screen's vowel in normalised formant space. MissingResult names any absent
// (pair, model, vowel).
std::vector<TrialManifest> prepare_manifest(std::span<const OptimizationResult> results,
                                            std::span<const PairId> selected_pairs,
                                            const TargetSet& targets, std::uint64_t seed);

nlohmann::json manifest_to_json(std::span<const TrialManifest> screens);
std::vector<TrialManifest> manifest_from_json(const nlohmann::json& j);

// Copies every referenced WAV into <dir>/stimuli and writes <dir>/manifest.json
// with paths relative to <dir>. Returns the rewritten screens.
std::vector<TrialManifest> write_manifest_bundle(const std::filesystem::path& dir,
                                                 std::span<const TrialManifest> screens);

struct RaterScoreSet {
  std::string rater_id;
  std::string screen_id;
  std::map<std::string, double> scores;  // stimulus id -> 0..100
};

nlohmann::json to_json(std::span<const RaterScoreSet> sets);
std::vector<RaterScoreSet> scores_from_json(const nlohmann::json& j);

struct ScoreValidation {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const noexcept { return errors.empty(); }
};

// Structural checks of an uploaded scores document against the manifest.
ScoreValidation validate_scores(const nlohmann::json& scores,
                                std::span<const TrialManifest> screens);

struct NormalizationOptions {
  bool clip_upper = false;
};

// (raw - anchor) / (reference - anchor), negatives clipped to 0.
// DegenerateScreen when reference == anchor.
double normalize_score(double raw, double anchor, double reference,
                       const NormalizationOptions& options = {});

struct NormalizedScore {
  std::string rater_id;
  std::string screen_id;
  Model model = Model::Adult;
  Vowel vowel = Vowel::A;
  std::string stimulus_id;
  StimulusRole role = StimulusRole::Candidate;
  std::optional<std::string> pair;
  double raw = 0.0;
  double normalized = 0.0;
};

struct NormalizationResult {
  std::vector<NormalizedScore> rows;
  std::vector<std::string> excluded;  // "rater/screen" with reference == anchor
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  void write_csv(const std::filesystem::path& path) const;
};

// Per rater and screen, using that rater's anchor and hidden-reference
// scores. SchemaError when a score set references an unknown screen or
// stimulus or misses a stimulus.
NormalizationResult normalize_scores(std::span<const RaterScoreSet> sets,
                                     std::span<const TrialManifest> screens,
                                     const NormalizationOptions& options = {});

}  // namespace vocalfit
