#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vocalfit/error.hpp"
#include "vocalfit/pipeline.hpp"

using namespace vocalfit;
using vocalfit::testing::read_file;
using vocalfit::testing::TempDir;

namespace fs = std::filesystem;

namespace {

CampaignConfig small(const fs::path& out, Model model = Model::Adult, unsigned jobs = 0) {
  CampaignConfig c;
  c.model = model;
  c.runs = 3;
  c.steps = 120;
  c.seed = 5;
  c.out_dir = out;
  c.jobs = jobs;
  return c;
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::vector<nlohmann::json> rows;
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line)) rows.push_back(nlohmann::json::parse(line));
  return rows;
}

}  // namespace

TEST(Postfilter, ClosedIntervals) {
  const FormantRange r;
  EXPECT_TRUE(formant_postfilter({500, 1500}, r));
  EXPECT_FALSE(formant_postfilter({100, 1500}, r));
  EXPECT_FALSE(formant_postfilter({500, 3100}, r));
  EXPECT_TRUE(formant_postfilter({150, 500}, r));
  EXPECT_TRUE(formant_postfilter({1100, 3000}, r));
  EXPECT_FALSE(formant_postfilter({std::nextafter(150.0, 0.0), 1500}, r));
}

TEST(Postfilter, ChildRangesContainAdultRanges) {
  const RangeOptions r;
  const FormantRange a = r.for_model(Model::Adult), c = r.for_model(Model::Child);
  EXPECT_TRUE(c.valid());
  EXPECT_GE(c.f1_min_hz, a.f1_min_hz);
  EXPECT_GE(c.f1_max_hz, a.f1_max_hz);
  EXPECT_GE(c.f2_min_hz, a.f2_min_hz);
  EXPECT_GE(c.f2_max_hz, a.f2_max_hz);
  EXPECT_DOUBLE_EQ(c.f1_max_hz, 1100.0 * 1.3);
}

TEST(Candidate, NeutralShapePassesEveryStage) {
  CampaignConfig c;
  std::vector<double> audio;
  const CandidateRecord r = process_candidate(VocalTractShape{}, c, &audio);
  EXPECT_TRUE(r.pass.prefilter && r.pass.formants && r.pass.formant_range && r.pass.synthesized &&
              r.pass.low_frequency);
  EXPECT_TRUE(r.failure.empty());
  ASSERT_TRUE(r.formants.has_value());
  EXPECT_NEAR(r.formants->f1_hz, 480.0, 60.0);
  EXPECT_EQ(audio.size(), 22050u);
}

TEST(Candidate, ClosedShapeStopsAtThePrefilter) {
  VocalTractShape s;
  at(s.params, Param::TongueDegree) = 1.0;
  std::vector<double> audio;
  const CandidateRecord r = process_candidate(s, CampaignConfig{}, &audio);
  EXPECT_FALSE(r.pass.prefilter);
  EXPECT_FALSE(r.pass.synthesized);
  EXPECT_FALSE(r.formants.has_value());
  EXPECT_FALSE(r.failure.empty());
  EXPECT_TRUE(audio.empty());
}

TEST(Campaign, VacuousCampaign) {
  TempDir dir;
  CampaignConfig c = small(dir / "d");
  c.steps = 0;
  const DatasetSummary s = run_campaign(c);
  EXPECT_EQ(s.attempted, 0u);
  EXPECT_EQ(s.retained, 0u);
  EXPECT_EQ(s.retention_pct, 0.0);
  EXPECT_TRUE(fs::exists(dir / "d/summary.json"));
  EXPECT_TRUE(read_file(dir / "d/dataset.jsonl").empty());
  const Dataset d = load_dataset(dir / "d");
  EXPECT_TRUE(d.rows.empty());
}

TEST(Campaign, StageCountsRowsAndFiles) {
  TempDir dir;
  const CampaignConfig c = small(dir / "d");
  const DatasetSummary s = run_campaign(c);
  EXPECT_EQ(s.attempted, 360u);
  EXPECT_GE(s.attempted, s.pass_prefilter);
  EXPECT_GE(s.pass_prefilter, s.pass_formant);
  EXPECT_GE(s.pass_formant, s.retained);
  EXPECT_GT(s.retained, 0u);
  EXPECT_EQ(s.pass_prefilter - s.pass_formant,
            s.failed_transfer + s.failed_peaks + s.failed_range);
  EXPECT_EQ(s.pass_formant - s.retained, s.failed_low_frequency);
  EXPECT_DOUBLE_EQ(s.retention_pct, 100.0 * s.retained / s.attempted);

  const auto summary = nlohmann::json::parse(read_file(dir / "d/summary.json"));
  for (const char* key : {"attempted", "pass_prefilter", "pass_formant", "retained", "retention_pct"}) {
    EXPECT_TRUE(summary.contains(key)) << key;
  }

  const auto rows = read_jsonl(dir / "d/dataset.jsonl");
  ASSERT_EQ(rows.size(), s.retained);
  std::pair<int, int> prev{-1, -1};
  for (const auto& r : rows) {
    for (const char* key : {"run_id", "step_id", "params", "f1_hz", "f2_hz", "wav"}) {
      ASSERT_TRUE(r.contains(key)) << key;
    }
    const std::pair<int, int> id{r["run_id"], r["step_id"]};
    EXPECT_LT(prev, id);
    prev = id;
    EXPECT_TRUE(formant_postfilter({r["f1_hz"], r["f2_hz"]}, FormantRange{}));
    EXPECT_TRUE(fs::exists(dir / "d" / r["wav"].get<std::string>()));
  }
  std::size_t wavs = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "d/wav")) ++wavs;
  EXPECT_EQ(wavs, s.retained);
  EXPECT_EQ(read_jsonl(dir / "d/shapes.jsonl").size(), 360u);

  const Dataset d = load_dataset(dir / "d");
  EXPECT_EQ(d.rows.size(), s.retained);
  EXPECT_EQ(d.summary.attempted, s.attempted);
  EXPECT_EQ(d.summary.sample_rate_hz, 44100.0);
}

TEST(Campaign, OutputIsIdenticalAcrossRunsAndWorkerCounts) {
  TempDir dir;
  run_campaign(small(dir / "a", Model::Child, 1));
  run_campaign(small(dir / "b", Model::Child, 4));
  for (const char* f : {"dataset.jsonl", "shapes.jsonl", "summary.json"}) {
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  }
  for (const auto& e : fs::directory_iterator(dir / "a/wav")) {
    EXPECT_EQ(read_file(e.path()), read_file(dir / "b/wav" / e.path().filename()));
  }
}

TEST(Campaign, ChildRowsRespectTheChildRange) {
  TempDir dir;
  CampaignConfig c = small(dir / "c", Model::Child);
  const DatasetSummary s = run_campaign(c);
  const FormantRange r = c.ranges.for_model(Model::Child);
  EXPECT_DOUBLE_EQ(s.range.f1_max_hz, r.f1_max_hz);
  for (const auto& row : load_dataset(dir / "c").rows) {
    EXPECT_TRUE(formant_postfilter(row.formants, r));
  }
}

TEST(Campaign, LoadRejectsRowsOutsideTheRange) {
  TempDir dir;
  run_campaign(small(dir / "d"));
  auto rows = read_jsonl(dir / "d/dataset.jsonl");
  ASSERT_FALSE(rows.empty());
  rows[0]["f1_hz"] = 50.0;
  {
    std::ofstream f(dir / "d/dataset.jsonl", std::ios::trunc);
    for (const auto& r : rows) f << r.dump() << "\n";
  }
  try {
    load_dataset(dir / "d");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaError);
  }
}

TEST(Campaign, InvalidConfigs) {
  TempDir dir;
  auto expect_config_error = [](const CampaignConfig& c) {
    try {
      run_campaign(c);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ConfigError);
    }
  };
  CampaignConfig c = small(dir / "x");
  c.runs = 0;
  expect_config_error(c);
  c = small("");
  expect_config_error(c);
  c = small(dir / "x");
  c.ranges.adult.f1_min_hz = 2000.0;
  expect_config_error(c);
  c = small(dir / "x");
  c.synthesis.sample_rate_hz = 16000.0;
  expect_config_error(c);
}

TEST(Campaign, MissingDatasetIsAnIoError) {
  TempDir dir;
  try {
    load_dataset(dir / "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
}
