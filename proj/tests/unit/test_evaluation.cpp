#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vocalfit/error.hpp"
#include "vocalfit/evaluation.hpp"
#include "vocalfit/wav.hpp"

using namespace vocalfit;
using vocalfit::testing::read_file;
using vocalfit::testing::SmallStudy;
using vocalfit::testing::TempDir;

namespace fs = std::filesystem;

namespace {

class Evaluation : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { study_ = vocalfit::testing::make_small_study(Model::Adult, 5, 60, 17).release(); }
  static void TearDownTestSuite() {
    delete study_;
    study_ = nullptr;
  }
  static const Dataset& dataset() { return study_->dataset; }
  static const TargetSet& targets() { return study_->targets; }
  static const fs::path& dir() { return study_->dir.path(); }

  static SmallStudy* study_;
};

SmallStudy* Evaluation::study_ = nullptr;

// Independent re-computation of one candidate's comparison vector.
std::vector<double> static_features(const std::vector<double>& audio, double sr,
                                    const FeatureVariant& v, const std::optional<CmvnStats>& cmvn) {
  FeatureMatrix fm = extract_features(audio, sr, v);
  if (cmvn) fm = apply_cmvn(fm, *cmvn);
  return reduce_static(fm);
}

}  // namespace

TEST(Pairs, FortyNamedPairs) {
  const auto pairs = enumerate_pairs();
  ASSERT_EQ(pairs.size(), 40u);
  std::set<std::string> names;
  for (const auto& p : pairs) {
    names.insert(p.name());
    EXPECT_EQ(PairId::parse(p.name()), p);
  }
  EXPECT_EQ(names.size(), 40u);
  EXPECT_EQ(pairs.front().name(), "logmel-mse");
  EXPECT_EQ(pairs[1].name(), "logmel-cos");
  EXPECT_EQ(pairs.back().name(), "mfcc22-hf-norm-chebyshev");
  EXPECT_EQ(PairId::parse("mfcc12-norm-cos").variant, (FeatureVariant{BaseFeature::Mfcc12, false, true}));
  EXPECT_THROW(PairId::parse("mfcc12"), Error);
  EXPECT_THROW(PairId::parse("logmel-norm-mse"), Error);
}

TEST(FormantSpace, ZScoresAndErrors) {
  SpeakerFormantStats s;
  s.mean_f1_hz = 500;
  s.std_f1_hz = 100;
  s.mean_f2_hz = 1500;
  s.std_f2_hz = 400;
  EXPECT_EQ(zscore_formants({500, 1500}, s), (ZPoint{0, 0}));
  EXPECT_EQ(zscore_formants({600, 1500}, s), (ZPoint{1, 0}));
  EXPECT_EQ(formant_error({0, 0}, {0, 0}), 0.0);
  EXPECT_EQ(formant_error({3, 4}, {0, 0}), 5.0);
  EXPECT_EQ(formant_error({1.5, -2}, {0.25, 3}), formant_error({0.25, 3}, {1.5, -2}));
  const std::vector<FormantPoint> one{{500, 1500}};
  EXPECT_THROW(SpeakerFormantStats::from_points(one, StatsSource::ModelDataset), Error);
  const std::vector<FormantPoint> flat{{500, 1500}, {500, 1600}};
  EXPECT_THROW(SpeakerFormantStats::from_points(flat, StatsSource::ModelDataset), Error);
}

TEST_F(Evaluation, DatasetSelfNormalisation) {
  const SpeakerFormantStats s = dataset_formant_stats(dataset());
  EXPECT_EQ(s.source, StatsSource::ModelDataset);
  EXPECT_EQ(s.count, dataset().rows.size());
  double m1 = 0, m2 = 0, v1 = 0, v2 = 0;
  const double n = static_cast<double>(dataset().rows.size());
  for (const auto& r : dataset().rows) {
    const ZPoint z = zscore_formants(r.formants, s);
    m1 += z.z1 / n;
    m2 += z.z2 / n;
  }
  for (const auto& r : dataset().rows) {
    const ZPoint z = zscore_formants(r.formants, s);
    v1 += (z.z1 - m1) * (z.z1 - m1) / n;
    v2 += (z.z2 - m2) * (z.z2 - m2) / n;
  }
  EXPECT_NEAR(m1, 0.0, 1e-6);
  EXPECT_NEAR(m2, 0.0, 1e-6);
  EXPECT_NEAR(std::sqrt(v1), 1.0, 1e-6);
  EXPECT_NEAR(std::sqrt(v2), 1.0, 1e-6);
}

TEST_F(Evaluation, TargetsComeFromTheirOwnRenditions) {
  EXPECT_EQ(targets().stats.source, StatsSource::TargetRenditions);
  EXPECT_EQ(targets().stats.count, 50u);
  ASSERT_EQ(targets().vowels.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(targets().vowels[i].vowel, kAllVowels[i]);
  const auto& a = targets().get(Vowel::A).formants;
  const auto& i = targets().get(Vowel::I).formants;
  const auto& u = targets().get(Vowel::U).formants;
  // Corners of the vowel triangle.
  EXPECT_GT(a.f1_hz, i.f1_hz);
  EXPECT_GT(a.f1_hz, u.f1_hz);
  EXPECT_GT(i.f2_hz, a.f2_hz);
  EXPECT_GT(a.f2_hz, u.f2_hz);
}

TEST_F(Evaluation, TwentyFiveResultsPerPairInVowelRunOrder) {
  const auto results = optimize_pair(dataset(), targets(), PairId::parse("mfcc12-mse").variant, Metric::Mse);
  ASSERT_EQ(results.size(), 25u);
  for (std::size_t k = 0; k < 25; ++k) {
    EXPECT_EQ(results[k].vowel, kAllVowels[k / 5]);
    EXPECT_EQ(results[k].run_id, static_cast<int>(k % 5));
  }
}

TEST_F(Evaluation, ArgminDominatesItsRunSplit) {
  for (const char* name : {"mfcc12-mse", "logmel-hf-chebyshev", "mfcc22-hf-norm-cos", "mfcc12-norm-manhattan"}) {
    const PairId pair = PairId::parse(name);
    const FeatureBank bank = FeatureBank::build(dataset(), targets(), pair.variant, {});
    const auto results =
        optimize_pair(dataset(), targets(), bank, pair.metric, dataset_formant_stats(dataset()));

    std::vector<std::vector<double>> cand;
    for (const auto& row : dataset().rows) {
      const WavData w = read_wav(dataset().audio_path(row));
      cand.push_back(static_features(w.samples, w.sample_rate_hz, pair.variant, bank.cmvn()));
    }
    for (const auto& r : results) {
      const auto& t = targets().get(r.vowel);
      const auto tv = static_features(t.audio, t.sample_rate_hz, pair.variant, bank.cmvn());
      double best = INFINITY;
      int best_step = -1;
      for (std::size_t i = 0; i < dataset().rows.size(); ++i) {
        if (dataset().rows[i].run_id != r.run_id) continue;
        const double d = distance(cand[i], tv, pair.metric);
        if (d < best) {
          best = d;
          best_step = dataset().rows[i].step_id;
        }
      }
      EXPECT_NEAR(r.feature_error, best, 1e-9 * std::max(1.0, best)) << name;
      EXPECT_EQ(r.best_step_id, best_step) << name;
      EXPECT_NEAR(r.formant_error_z, formant_error(r.candidate_z, r.target_z), 1e-15);
      EXPECT_EQ(r.target_z, zscore_formants(t.formants, targets().stats));
    }
  }
}

TEST_F(Evaluation, CmvnStatsArePooledOverTheDataset) {
  const FeatureVariant v{BaseFeature::Mfcc22, true, true};
  const FeatureBank bank = FeatureBank::build(dataset(), targets(), v, {});
  ASSERT_TRUE(bank.cmvn().has_value());
  std::vector<FeatureMatrix> corpus;
  for (const auto& row : dataset().rows) {
    const WavData w = read_wav(dataset().audio_path(row));
    corpus.push_back(extract_features(w.samples, w.sample_rate_hz, v));
  }
  const CmvnStats ref = compute_cmvn_stats(corpus);
  for (std::size_t d = 0; d < 22; ++d) {
    EXPECT_NEAR(bank.cmvn()->mean[d], ref.mean[d], 1e-9);
    EXPECT_NEAR(bank.cmvn()->std[d], ref.std[d], 1e-9);
  }
  EXPECT_FALSE(FeatureBank::build(dataset(), targets(), FeatureVariant{BaseFeature::Mfcc22, true, false}, {})
                   .cmvn()
                   .has_value());
}

TEST_F(Evaluation, TargetAudioInTheDatasetWinsWithZeroError) {
  Dataset d = dataset();
  const auto it = std::find_if(d.rows.begin(), d.rows.end(), [](const DatasetRow& r) { return r.run_id == 2; });
  ASSERT_NE(it, d.rows.end());
  it->wav = targets().get(Vowel::O).wav.string();
  for (const auto& pair : enumerate_pairs()) {
    const auto results = optimize_pair(d, targets(), pair.variant, pair.metric);
    const auto& r = results[static_cast<std::size_t>(Vowel::O) * 5 + 2];
    ASSERT_EQ(r.vowel, Vowel::O);
    ASSERT_EQ(r.run_id, 2);
    EXPECT_EQ(r.best_step_id, it->step_id) << pair.name();
    EXPECT_NEAR(r.feature_error, 0.0, 1e-12) << pair.name();
  }
}

TEST_F(Evaluation, CosineSelectionIgnoresTargetScale) {
  for (const auto& v : enumerate_variants()) {
    if (v.cmvn) continue;
    FeatureBank bank = FeatureBank::build(dataset(), targets(), v, {});
    const auto stats = dataset_formant_stats(dataset());
    const auto before = optimize_pair(dataset(), targets(), bank, Metric::Cosine, stats);
    bank.scale_targets(2.0);
    const auto after = optimize_pair(dataset(), targets(), bank, Metric::Cosine, stats);
    for (std::size_t k = 0; k < before.size(); ++k) {
      EXPECT_EQ(before[k].best_step_id, after[k].best_step_id) << v.name();
    }
  }
}

TEST_F(Evaluation, FormantStatisticsNeverSteerTheSelection) {
  const FeatureBank bank = FeatureBank::build(dataset(), targets(), FeatureVariant{BaseFeature::Mfcc12}, {});
  SpeakerFormantStats stats = dataset_formant_stats(dataset());
  const auto base = optimize_pair(dataset(), targets(), bank, Metric::Manhattan, stats);
  stats.mean_f1_hz += 300.0;
  stats.std_f2_hz *= 3.0;
  const auto moved = optimize_pair(dataset(), targets(), bank, Metric::Manhattan, stats);
  for (std::size_t k = 0; k < base.size(); ++k) {
    EXPECT_EQ(base[k].best_step_id, moved[k].best_step_id);
    EXPECT_EQ(base[k].feature_error, moved[k].feature_error);
  }
  EXPECT_NE(base[0].formant_error_z, moved[0].formant_error_z);
}

TEST_F(Evaluation, EmptyRunAndMissingTarget) {
  Dataset d = dataset();
  std::erase_if(d.rows, [](const DatasetRow& r) { return r.run_id == 3; });
  try {
    optimize_pair(d, targets(), FeatureVariant{}, Metric::Mse);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyRun);
  }
  TargetSet t = targets();
  t.vowels.pop_back();
  try {
    optimize_pair(dataset(), t, FeatureVariant{}, Metric::Mse);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingTarget);
  }
}

TEST_F(Evaluation, FramewiseComparisonAlsoSelectsTheMinimum) {
  EvaluationOptions o;
  o.comparison = Comparison::Framewise;
  const FeatureVariant v{BaseFeature::Mfcc12, false, false};
  const auto results = optimize_pair(dataset(), targets(), v, Metric::Mse, o);
  ASSERT_EQ(results.size(), 25u);
  const auto& r = results[0];
  const auto t = extract_features(targets().get(r.vowel).audio, 44100.0, v);
  for (const auto& row : dataset().rows) {
    if (row.run_id != r.run_id) continue;
    const WavData w = read_wav(dataset().audio_path(row));
    EXPECT_GE(framewise_distance(extract_features(w.samples, 44100.0, v), t, Metric::Mse) + 1e-12,
              r.feature_error);
  }
}

TEST_F(Evaluation, ParallelEvaluationIsDeterministic) {
  const std::vector<PairId> pairs{PairId::parse("logmel-cos"), PairId::parse("mfcc22-norm-mse"),
                                  PairId::parse("mfcc12-hf-chebyshev")};
  EvaluationOptions one, many;
  one.jobs = 1;
  many.jobs = 3;
  const auto a = evaluate_dataset(dataset(), targets(), pairs, one);
  const auto b = evaluate_dataset(dataset(), targets(), pairs, many);
  ASSERT_EQ(a.size(), 75u);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(to_json(a[k]), to_json(b[k]));
    EXPECT_EQ(a[k].pair, pairs[k / 25]);
  }
}

TEST_F(Evaluation, ResultsJsonlRoundTrip) {
  TempDir tmp;
  const auto results = optimize_pair(dataset(), targets(), FeatureVariant{BaseFeature::Mfcc22, true, true}, Metric::Cosine);
  write_results_jsonl(tmp / "r.jsonl", results);
  const auto back = read_results_jsonl(tmp / "r.jsonl");
  ASSERT_EQ(back.size(), results.size());
  for (std::size_t k = 0; k < back.size(); ++k) EXPECT_EQ(to_json(back[k]), to_json(results[k]));
  const auto j = to_json(results[0]);
  for (const char* key : {"variant", "metric", "vowel", "run_id", "feature_error", "formant_error_z"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST_F(Evaluation, ReportMatchesIndependentRecomputation) {
  const auto pairs = enumerate_pairs();
  const auto results = evaluate_dataset(dataset(), targets(), pairs);
  ASSERT_EQ(results.size(), 1000u);
  const ImpactReport rep = aggregate_report(results);

  std::map<std::pair<std::string, bool>, std::pair<double, int>> hf;
  std::map<std::string, std::pair<double, int>> metric;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> feature;
  for (const auto& r : results) {
    const auto j = to_json(r);
    const std::string name = j["variant"].get<std::string>();
    const std::string base = name.substr(0, name.find('-'));
    const bool hf_on = name.find("-hf") != std::string::npos;
    const bool plain = name == base;
    auto add = [&](auto& slot) {
      slot.first += j["formant_error_z"].get<double>();
      slot.second += 1;
    };
    add(hf[{base, hf_on}]);
    if (plain) {
      add(metric[j["metric"].get<std::string>()]);
      add(feature[{j["vowel"].get<std::string>(), base}]);
    }
  }

  ASSERT_EQ(rep.hf_impact.size(), 3u);
  for (const auto& row : rep.hf_impact) {
    const std::string b(to_string(row.base));
    const auto& off = hf[std::make_pair(b, false)];
    const auto& on = hf[std::make_pair(b, true)];
    EXPECT_NEAR(row.mean_hf_off, off.first / off.second, 1e-9);
    EXPECT_NEAR(row.mean_hf_on, on.first / on.second, 1e-9);
    EXPECT_EQ(row.n_off, static_cast<std::size_t>(off.second));
  }
  ASSERT_EQ(rep.metric_impact.size(), 4u);
  for (const auto& row : rep.metric_impact) {
    const auto& slot = metric[std::string(to_string(row.metric))];
    EXPECT_NEAR(row.mean_error, slot.first / slot.second, 1e-9);
    EXPECT_EQ(row.n, 75u);
  }
  ASSERT_EQ(rep.feature_impact.size(), 15u);
  for (const auto& row : rep.feature_impact) {
    const auto& slot = feature[std::make_pair(std::string(to_string(row.vowel)), std::string(to_string(row.base)))];
    EXPECT_NEAR(row.mean_error, slot.first / slot.second, 1e-9);
    EXPECT_EQ(row.n, 20u);
  }
  ASSERT_EQ(rep.annotations.size(), 1u);

  TempDir tmp;
  rep.write(tmp.path());
  for (const char* f : {"report.json", "hf_impact.csv", "metric_impact.csv", "feature_impact.csv"}) {
    EXPECT_TRUE(fs::exists(tmp / f)) << f;
  }
  const auto j = nlohmann::json::parse(read_file(tmp / "report.json"));
  EXPECT_EQ(j["hf_impact"].size(), 3u);
  EXPECT_EQ(j["metric_impact"].size(), 4u);
  EXPECT_EQ(j["feature_impact"].size(), 15u);
}

TEST_F(Evaluation, IncompleteGridNamesTheMissingPairs) {
  std::vector<PairId> pairs;
  for (const auto& p : enumerate_pairs()) {
    if (p.variant.base != BaseFeature::Mfcc22) pairs.push_back(p);
  }
  const auto results = evaluate_dataset(dataset(), targets(), pairs);
  try {
    aggregate_report(results);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IncompleteGrid);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("adult:mfcc22-mse"), std::string::npos);
    EXPECT_NE(msg.find("adult:mfcc22-hf-norm-chebyshev"), std::string::npos);
    EXPECT_EQ(msg.find("mfcc12"), std::string::npos);
  }
}

TEST_F(Evaluation, HandWrittenTargetFilesLoad) {
  TempDir tmp;
  nlohmann::json doc;
  for (const auto& v : targets().vowels) {
    fs::copy_file(v.wav, tmp / (std::string("rec_") + std::string(to_string(v.vowel)) + ".wav"));
    doc["vowels"].push_back({{"vowel", to_string(v.vowel)},
                             {"wav", std::string("rec_") + std::string(to_string(v.vowel)) + ".wav"},
                             {"f1_hz", v.formants.f1_hz + 10.0},
                             {"f2_hz", v.formants.f2_hz}});
  }
  doc["stats"] = {{"mean_f1_hz", 450.0}, {"std_f1_hz", 120.0}, {"mean_f2_hz", 1400.0}, {"std_f2_hz", 450.0}};
  {
    std::ofstream f(tmp / "targets.json");
    f << doc.dump();
  }
  const TargetSet t = load_targets(tmp.path());
  EXPECT_EQ(t.get(Vowel::E).formants.f1_hz, targets().get(Vowel::E).formants.f1_hz + 10.0);
  EXPECT_EQ(t.stats.source, StatsSource::TargetRenditions);

  doc["vowels"].erase(doc["vowels"].begin());
  {
    std::ofstream f(tmp / "targets.json");
    f << doc.dump();
  }
  EXPECT_THROW(load_targets(tmp.path()), Error);
}
