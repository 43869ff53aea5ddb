#include "vocalfit/targets.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <nlohmann/json.hpp>

#include "rng.hpp"
#include "vocalfit/error.hpp"
#include "vocalfit/wav.hpp"

namespace vocalfit {

namespace fs = std::filesystem;

const TargetVowel& TargetSet::get(Vowel vowel) const {
  for (const auto& t : vowels) {
    if (t.vowel == vowel) return t;
  }
  throw Error(Errc::MissingTarget, "no target for vowel /" + std::string(to_string(vowel)) + "/");
}

const std::array<ParamVector, 5>& target_speaker_params() noexcept {
  // jaw, tongue position, degree, height, lip area, protrusion, pharynx, velum
  static const std::array<ParamVector, 5> params{{
      {1.0, 0.24, 0.05, 0.0, 4.0, 1.45, 0.85, 0.5},     // a
      {0.98, 0.42, 0.06, 0.6, 0.64, 0.0, 0.5, 0.5},     // e
      {0.19, 0.66, 0.565, 0.455, 3.83, 0.0, 1.27, 0.5}, // i
      {0.835, 0.485, 0.573, 0.148, 1.87, 1.82, 1.31, 0.5},  // o
      {1.0, 0.824, 0.0, 0.537, 0.4, 2.0, 1.5, 0.5},     // u
  }};
  return params;
}

namespace {

std::optional<FormantPoint> try_formants(const ParamVector& p, double length_scale,
                                         const AcousticOptions& acoustics) {
  try {
    return pick_formants(transfer_function(params_to_area(p, length_scale, 1.0), acoustics),
                         acoustics);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

TargetSet make_default_targets(const fs::path& out_dir, const TargetOptions& o,
                               const AcousticOptions& acoustics, const SynthesisOptions& syn) {
  if (o.renditions < 2 * static_cast<int>(kAllVowels.size())) {
    throw Error(Errc::InvalidArgument, "need at least two renditions per vowel");
  }
  if (!(o.length_scale > 0.0) || !(o.perturbation >= 0.0)) {
    throw Error(Errc::InvalidArgument, "invalid target speaker options");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string());

  const auto& ranges = param_ranges();
  const auto& templates = target_speaker_params();
  nlohmann::json vowels = nlohmann::json::array();
  nlohmann::json renditions = nlohmann::json::array();
  std::vector<FormantPoint> points;

  for (std::size_t v = 0; v < kAllVowels.size(); ++v) {
    const Vowel vowel = kAllVowels[v];
    const auto area = params_to_area(templates[v], o.length_scale, 1.0);
    const auto tf = transfer_function(area, acoustics);
    const auto fp = pick_formants(tf, acoustics);
    const auto audio = synthesize_vowel(tf, o.f0_hz, syn.duration_s, syn.sample_rate_hz, syn);
    const std::string name = "target_" + std::string(to_string(vowel)) + ".wav";
    write_wav(out_dir / name, audio, syn.sample_rate_hz);
    vowels.push_back({{"vowel", to_string(vowel)},
                      {"wav", name},
                      {"f1_hz", fp.f1_hz},
                      {"f2_hz", fp.f2_hz},
                      {"params", templates[v]}});

    // Jittered realisations stand in for repeated recordings of the speaker.
    // Spread evenly over the vowels; the first vowels take any remainder.
    const int quota = o.renditions / static_cast<int>(kAllVowels.size()) +
                      (static_cast<int>(v) < o.renditions % static_cast<int>(kAllVowels.size()));
    detail::Rng rng{o.seed, v};
    int made = 0;
    for (int attempt = 0; made < quota && attempt < 100 * quota; ++attempt) {
      ParamVector p = templates[v];
      for (std::size_t k = 0; k < kNumParams; ++k) {
        const double span = ranges[k].hi - ranges[k].lo;
        p[k] = std::clamp(p[k] + rng.normal() * o.perturbation * span, ranges[k].lo, ranges[k].hi);
      }
      auto r = try_formants(p, o.length_scale, acoustics);
      if (!r) continue;
      points.push_back(*r);
      renditions.push_back({{"vowel", to_string(vowel)}, {"f1_hz", r->f1_hz}, {"f2_hz", r->f2_hz}});
      ++made;
    }
  }

  const auto stats = SpeakerFormantStats::from_points(points, StatsSource::TargetRenditions);
  nlohmann::json doc = {
      {"vowels", vowels},
      {"stats",
       {{"mean_f1_hz", stats.mean_f1_hz},
        {"std_f1_hz", stats.std_f1_hz},
        {"mean_f2_hz", stats.mean_f2_hz},
        {"std_f2_hz", stats.std_f2_hz},
        {"source", to_string(stats.source)},
        {"count", stats.count}}},
      {"renditions", renditions},
      {"speaker", {{"length_scale", o.length_scale}, {"f0_hz", o.f0_hz}, {"seed", o.seed}}}};
  std::ofstream f(out_dir / "targets.json", std::ios::trunc);
  f << doc.dump(2) << '\n';
  if (!f) throw Error(Errc::IoError, "failed writing targets.json");
  f.close();
  return load_targets(out_dir);
}

TargetSet load_targets(const fs::path& dir) {
  std::ifstream f(dir / "targets.json");
  if (!f) throw Error(Errc::IoError, "no targets.json in " + dir.string());
  TargetSet set;
  try {
    const auto doc = nlohmann::json::parse(f);
    for (const auto& row : doc.at("vowels")) {
      TargetVowel t;
      t.vowel = vowel_from_string(row.at("vowel").get<std::string>());
      t.wav = fs::absolute(dir / row.at("wav").get<std::string>());
      t.formants = {row.at("f1_hz").get<double>(), row.at("f2_hz").get<double>()};
      for (const auto& existing : set.vowels) {
        if (existing.vowel == t.vowel) {
          throw Error(Errc::SchemaError, "duplicate target /" + std::string(to_string(t.vowel)) + "/");
        }
      }
      auto wav = read_wav(t.wav);
      t.audio = std::move(wav.samples);
      t.sample_rate_hz = wav.sample_rate_hz;
      set.vowels.push_back(std::move(t));
    }
    const auto& s = doc.at("stats");
    set.stats.mean_f1_hz = s.at("mean_f1_hz").get<double>();
    set.stats.std_f1_hz = s.at("std_f1_hz").get<double>();
    set.stats.mean_f2_hz = s.at("mean_f2_hz").get<double>();
    set.stats.std_f2_hz = s.at("std_f2_hz").get<double>();
    set.stats.source = stats_source_from_string(s.value("source", std::string("target_renditions")));
    set.stats.count = s.value("count", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("targets.json: ") + e.what());
  }
  if (!(set.stats.std_f1_hz > 0.0) || !(set.stats.std_f2_hz > 0.0)) {
    throw Error(Errc::SchemaError, "targets.json: speaker stds must be positive");
  }
  if (set.vowels.size() != kAllVowels.size()) {
    throw Error(Errc::SchemaError, "targets.json must list exactly the five vowels a e i o u");
  }
  std::sort(set.vowels.begin(), set.vowels.end(),
            [](const TargetVowel& a, const TargetVowel& b) { return a.vowel < b.vowel; });
  return set;
}

}  // namespace vocalfit
