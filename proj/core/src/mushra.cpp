#include "vocalfit/mushra.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "vocalfit/error.hpp"

namespace vocalfit {

namespace fs = std::filesystem;

std::string_view to_string(StimulusRole role) noexcept {
  switch (role) {
    case StimulusRole::Reference: return "reference";
    case StimulusRole::HiddenReference: return "hidden_reference";
    case StimulusRole::Anchor: return "anchor";
    case StimulusRole::Candidate: return "candidate";
  }
  return "candidate";
}

StimulusRole stimulus_role_from_string(std::string_view name) {
  for (auto r : {StimulusRole::Reference, StimulusRole::HiddenReference, StimulusRole::Anchor,
                 StimulusRole::Candidate}) {
    if (to_string(r) == name) return r;
  }
  throw Error(Errc::SchemaError, "unknown stimulus role '" + std::string(name) + "'");
}

std::size_t TrialManifest::rated_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(stimuli.begin(), stimuli.end(), [](const Stimulus& s) {
    return s.role != StimulusRole::Reference;
  }));
}

const Stimulus* TrialManifest::find(std::string_view stimulus_id) const noexcept {
  for (const auto& s : stimuli) {
    if (s.id == stimulus_id) return &s;
  }
  return nullptr;
}

std::vector<PairId> listening_test_pairs() {
  std::vector<PairId> out;
  for (const char* name : {"mfcc12-mse", "mfcc12-norm-mse", "mfcc12-cos", "mfcc12-norm-cos",
                           "mfcc22-mse", "mfcc22-norm-mse", "mfcc22-cos", "mfcc22-norm-cos",
                           "logmel-mse", "logmel-chebyshev"}) {
    out.push_back(PairId::parse(name));
  }
  return out;
}

namespace {

const OptimizationResult& best_over_runs(std::span<const OptimizationResult> results,
                                         const PairId& pair, Model model, Vowel vowel) {
  const OptimizationResult* best = nullptr;
  for (const auto& r : results) {
    if (r.pair != pair || r.model != model || r.vowel != vowel) continue;
    if (!best || r.feature_error < best->feature_error ||
        (r.feature_error == best->feature_error && r.run_id < best->run_id)) {
      best = &r;
    }
  }
  if (!best) {
    throw Error(Errc::MissingResult, "no result for " + pair.name() + " " +
                                         std::string(to_string(model)) + " /" +
                                         std::string(to_string(vowel)) + "/");
  }
  return *best;
}

Vowel farthest_vowel(const TargetSet& targets, Vowel from) {
  const ZPoint origin = zscore_formants(targets.get(from).formants, targets.stats);
  Vowel best = from;
  double best_d = -1.0;
  for (Vowel v : kAllVowels) {
    if (v == from) continue;
    const double d = formant_error(zscore_formants(targets.get(v).formants, targets.stats), origin);
    if (d > best_d) {
      best_d = d;
      best = v;
    }
  }
  return best;
}

}  // namespace

std::vector<TrialManifest> prepare_manifest(std::span<const OptimizationResult> results,
                                            std::span<const PairId> selected_pairs,
                                            const TargetSet& targets, std::uint64_t seed) {
  if (selected_pairs.empty()) throw Error(Errc::InvalidArgument, "no pairs selected");
  std::vector<Model> models;
  for (Model m : {Model::Adult, Model::Child}) {
    if (std::any_of(results.begin(), results.end(),
                    [m](const OptimizationResult& r) { return r.model == m; })) {
      models.push_back(m);
    }
  }
  if (models.empty()) throw Error(Errc::MissingResult, "no optimisation results");

  std::vector<TrialManifest> screens;
  for (Model model : models) {
    for (Vowel vowel : kAllVowels) {
      TrialManifest screen;
      screen.screen_id = std::string(to_string(model)) + "-" + std::string(to_string(vowel));
      screen.model = model;
      screen.vowel = vowel;
      screen.seed = seed + screens.size();

      const auto& target = targets.get(vowel);
      std::vector<Stimulus> rated;
      for (const auto& pair : selected_pairs) {
        const auto& r = best_over_runs(results, pair, model, vowel);
        rated.push_back({"", r.best_wav, StimulusRole::Candidate, pair.name()});
      }
      rated.push_back({"", target.wav.string(), StimulusRole::HiddenReference, std::nullopt});
      const Vowel anchor_vowel = farthest_vowel(targets, vowel);
      const auto& anchor = best_over_runs(results, selected_pairs.front(), model, anchor_vowel);
      rated.push_back({"", anchor.best_wav, StimulusRole::Anchor, std::nullopt});

      std::mt19937_64 engine(screen.seed);
      for (std::size_t i = rated.size() - 1; i > 0; --i) {
        std::swap(rated[i], rated[engine() % (i + 1)]);
      }
      screen.stimuli.push_back({"reference", target.wav.string(), StimulusRole::Reference, std::nullopt});
      for (std::size_t i = 0; i < rated.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "s%02zu", i + 1);
        rated[i].id = id;
        screen.stimuli.push_back(std::move(rated[i]));
      }
      screens.push_back(std::move(screen));
    }
  }
  return screens;
}

nlohmann::json manifest_to_json(std::span<const TrialManifest> screens) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : screens) {
    nlohmann::json stimuli = nlohmann::json::array();
    for (const auto& st : s.stimuli) {
      nlohmann::json j = {{"id", st.id}, {"wav", st.wav}, {"role", to_string(st.role)}};
      if (st.pair) j["pair"] = *st.pair;
      stimuli.push_back(std::move(j));
    }
    arr.push_back({{"screen_id", s.screen_id},
                   {"model", to_string(s.model)},
                   {"vowel", to_string(s.vowel)},
                   {"stimuli", std::move(stimuli)},
                   {"seed", s.seed}});
  }
  return {{"screens", std::move(arr)}};
}

std::vector<TrialManifest> manifest_from_json(const nlohmann::json& j) {
  std::vector<TrialManifest> out;
  try {
    std::set<std::string> ids;
    for (const auto& sj : j.at("screens")) {
      TrialManifest s;
      s.screen_id = sj.at("screen_id").get<std::string>();
      if (!ids.insert(s.screen_id).second) {
        throw Error(Errc::SchemaError, "duplicate screen " + s.screen_id);
      }
      s.model = model_from_string(sj.at("model").get<std::string>());
      s.vowel = vowel_from_string(sj.at("vowel").get<std::string>());
      s.seed = sj.at("seed").get<std::uint64_t>();
      int refs = 0, hidden = 0, anchors = 0;
      std::set<std::string> stim_ids;
      for (const auto& st : sj.at("stimuli")) {
        Stimulus x;
        x.id = st.at("id").get<std::string>();
        x.wav = st.at("wav").get<std::string>();
        x.role = stimulus_role_from_string(st.at("role").get<std::string>());
        if (auto it = st.find("pair"); it != st.end() && !it->is_null()) x.pair = it->get<std::string>();
        if (!stim_ids.insert(x.id).second) {
          throw Error(Errc::SchemaError, s.screen_id + ": duplicate stimulus id " + x.id);
        }
        refs += x.role == StimulusRole::Reference;
        hidden += x.role == StimulusRole::HiddenReference;
        anchors += x.role == StimulusRole::Anchor;
        s.stimuli.push_back(std::move(x));
      }
      if (refs != 1 || hidden != 1 || anchors != 1) {
        throw Error(Errc::SchemaError,
                    s.screen_id + ": need exactly one reference, hidden reference and anchor");
      }
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("manifest: ") + e.what());
  }
  return out;
}

std::vector<TrialManifest> write_manifest_bundle(const fs::path& dir,
                                                 std::span<const TrialManifest> screens) {
  std::error_code ec;
  fs::create_directories(dir / "stimuli", ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + (dir / "stimuli").string());
  std::vector<TrialManifest> out(screens.begin(), screens.end());
  for (auto& s : out) {
    for (auto& st : s.stimuli) {
      const std::string name = s.screen_id + "_" + st.id + ".wav";
      fs::copy_file(st.wav, dir / "stimuli" / name, fs::copy_options::overwrite_existing, ec);
      if (ec) throw Error(Errc::IoError, "cannot copy " + st.wav + ": " + ec.message());
      st.wav = "stimuli/" + name;
    }
  }
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  f << manifest_to_json(out).dump(2) << '\n';
  if (!f) throw Error(Errc::IoError, "failed writing manifest.json");
  return out;
}

nlohmann::json to_json(std::span<const RaterScoreSet> sets) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sets) {
    arr.push_back({{"rater_id", s.rater_id}, {"screen_id", s.screen_id}, {"scores", s.scores}});
  }
  return arr;
}

std::vector<RaterScoreSet> scores_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(Errc::SchemaError, "scores document must be a JSON array");
  std::vector<RaterScoreSet> out;
  try {
    for (const auto& e : j) {
      RaterScoreSet s;
      s.rater_id = e.at("rater_id").get<std::string>();
      s.screen_id = e.at("screen_id").get<std::string>();
      for (const auto& [k, v] : e.at("scores").items()) s.scores[k] = v.get<double>();
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("scores: ") + e.what());
  }
  return out;
}

ScoreValidation validate_scores(const nlohmann::json& scores,
                                std::span<const TrialManifest> screens) {
  ScoreValidation v;
  if (!scores.is_array()) {
    v.errors.push_back("scores document must be a JSON array");
    return v;
  }
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, std::set<std::string>> rater_screens;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& e = scores[i];
    const std::string where = "entry " + std::to_string(i);
    if (!e.is_object() || !e.contains("rater_id") || !e.contains("screen_id") ||
        !e.contains("scores") || !e["rater_id"].is_string() || !e["screen_id"].is_string() ||
        !e["scores"].is_object()) {
      v.errors.push_back(where + ": needs string rater_id, string screen_id and object scores");
      continue;
    }
    const auto rater = e["rater_id"].get<std::string>();
    const auto screen_id = e["screen_id"].get<std::string>();
    const auto it = std::find_if(screens.begin(), screens.end(),
                                 [&](const TrialManifest& s) { return s.screen_id == screen_id; });
    if (it == screens.end()) {
      v.errors.push_back(where + ": unknown screen " + screen_id);
      continue;
    }
    if (!seen.insert({rater, screen_id}).second) {
      v.errors.push_back(where + ": rater " + rater + " scored " + screen_id + " twice");
    }
    rater_screens[rater].insert(screen_id);
    for (const auto& [id, val] : e["scores"].items()) {
      const Stimulus* st = it->find(id);
      if (!st) {
        v.errors.push_back(where + ": unknown stimulus " + id + " on " + screen_id);
      } else if (st->role == StimulusRole::Reference) {
        v.warnings.push_back(where + ": score for the visible reference is ignored");
      }
      if (!val.is_number() || val.get<double>() < 0.0 || val.get<double>() > 100.0) {
        v.errors.push_back(where + ": score for " + id + " must be a number in [0, 100]");
      }
    }
    for (const auto& st : it->stimuli) {
      if (st.role != StimulusRole::Reference && !e["scores"].contains(st.id)) {
        v.errors.push_back(where + ": missing score for " + st.id + " on " + screen_id);
      }
    }
  }
  for (const auto& [rater, done] : rater_screens) {
    for (const auto& s : screens) {
      if (!done.count(s.screen_id)) {
        v.warnings.push_back("rater " + rater + " did not rate screen " + s.screen_id);
      }
    }
  }
  return v;
}

double normalize_score(double raw, double anchor, double reference,
                       const NormalizationOptions& options) {
  if (reference == anchor) {
    throw Error(Errc::DegenerateScreen, "reference and anchor scores are equal");
  }
  double v = (raw - anchor) / (reference - anchor);
  if (v < 0.0) v = 0.0;
  if (options.clip_upper && v > 1.0) v = 1.0;
  return v;
}

NormalizationResult normalize_scores(std::span<const RaterScoreSet> sets,
                                     std::span<const TrialManifest> screens,
                                     const NormalizationOptions& options) {
  NormalizationResult out;
  for (const auto& set : sets) {
    const auto it = std::find_if(screens.begin(), screens.end(),
                                 [&](const TrialManifest& s) { return s.screen_id == set.screen_id; });
    if (it == screens.end()) throw Error(Errc::SchemaError, "unknown screen " + set.screen_id);
    const TrialManifest& screen = *it;
    for (const auto& [id, raw] : set.scores) {
      if (!screen.find(id)) {
        throw Error(Errc::SchemaError, "unknown stimulus " + id + " on " + screen.screen_id);
      }
    }
    double anchor = 0.0, reference = 0.0;
    for (const auto& st : screen.stimuli) {
      if (st.role == StimulusRole::Reference) continue;
      const auto s = set.scores.find(st.id);
      if (s == set.scores.end()) {
        throw Error(Errc::SchemaError, set.rater_id + " has no score for " + st.id + " on " +
                                           screen.screen_id);
      }
      if (st.role == StimulusRole::Anchor) anchor = s->second;
      if (st.role == StimulusRole::HiddenReference) reference = s->second;
    }
    if (anchor == reference) {
      out.excluded.push_back(set.rater_id + "/" + screen.screen_id);
      out.warnings.push_back("DegenerateScreen: " + set.rater_id + "/" + screen.screen_id +
                             " scored reference and anchor equally; excluded");
      continue;
    }
    for (const auto& st : screen.stimuli) {
      if (st.role == StimulusRole::Reference) continue;
      const double raw = set.scores.at(st.id);
      out.rows.push_back({set.rater_id, screen.screen_id, screen.model, screen.vowel, st.id, st.role,
                          st.pair, raw, normalize_score(raw, anchor, reference, options)});
    }
  }
  return out;
}

nlohmann::json NormalizationResult::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_j.push_back({{"rater_id", r.rater_id},
                      {"screen_id", r.screen_id},
                      {"model", vocalfit::to_string(r.model)},
                      {"vowel", vocalfit::to_string(r.vowel)},
                      {"stimulus_id", r.stimulus_id},
                      {"role", vocalfit::to_string(r.role)},
                      {"pair", r.pair ? nlohmann::json(*r.pair) : nlohmann::json(nullptr)},
                      {"raw", r.raw},
                      {"normalized", r.normalized}});
  }
  return {{"rows", rows_j}, {"excluded", excluded}, {"warnings", warnings}};
}

void NormalizationResult::write_csv(const fs::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write " + path.string());
  f << "rater_id,screen_id,model,vowel,stimulus_id,role,pair,raw,normalized\n";
  char num[64];
  for (const auto& r : rows) {
    f << r.rater_id << ',' << r.screen_id << ',' << vocalfit::to_string(r.model) << ','
      << vocalfit::to_string(r.vowel) << ',' << r.stimulus_id << ',' << vocalfit::to_string(r.role)
      << ',' << r.pair.value_or("");
    std::snprintf(num, sizeof num, ",%.17g,%.17g\n", r.raw, r.normalized);
    f << num;
  }
  if (!f) throw Error(Errc::IoError, "failed writing " + path.string());
}

}  // namespace vocalfit
