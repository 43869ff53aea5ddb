#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vocalfit/cli/dispatch.hpp"
#include "vocalfit/mushra.hpp"
#include "vocalfit/surface.hpp"

using vocalfit::testing::read_file;
using vocalfit::testing::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;
namespace cli = vocalfit::cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run vf(std::vector<std::string> args) {
  args.insert(args.begin(), "vocalfit");
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

json load(const fs::path& p) { return json::parse(read_file(p)); }

// Two small campaigns and the default targets, shared by every test.
class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new TempDir("vocalfit-cli");
    for (const char* model : {"adult", "child"}) {
      const auto r = vf({"campaign", "--model", model, "--runs", "5", "--steps", "40", "--seed", "3",
                         "--out", (*root_ / model).string()});
      ASSERT_EQ(r.code, 0) << r.err;
    }
    const auto r = vf({"targets", "--out", (*root_ / "targets").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete root_;
    root_ = nullptr;
  }
  static std::string at(const std::string& name) { return (*root_ / name).string(); }

  static TempDir* root_;
};

TempDir* Cli::root_ = nullptr;

}  // namespace

TEST(CliBasics, VersionAndHelp) {
  auto r = vf({"--version"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("vocalfit ", 0), 0u);
  EXPECT_NE(r.out.find("config schema 1"), std::string::npos);
  r = vf({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("campaign"), std::string::npos);
  r = vf({"mushra", "normalize", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--clip-upper"), std::string::npos);
}

TEST(CliBasics, UsageErrorsExitOneAndWriteNothing) {
  TempDir t;
  EXPECT_EQ(vf({}).code, cli::kExitUsage);
  EXPECT_EQ(vf({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(vf({"campaign", "--out", (t / "a").string(), "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(vf({"campaign"}).code, cli::kExitUsage);
  EXPECT_EQ(vf({"campaign", "--model", "toddler", "--out", (t / "b").string()}).code, cli::kExitUsage);
  EXPECT_EQ(vf({"--set", "campaign.rnus=2", "campaign", "--out", (t / "c").string()}).code, cli::kExitUsage);
  EXPECT_EQ(vf({"--config", (t / "none.json").string(), "config"}).code, cli::kExitUsage);
  EXPECT_EQ(vf({"mushra"}).code, cli::kExitUsage);
  EXPECT_TRUE(fs::is_empty(t.path()));
}

TEST(CliBasics, ConfigCommandShowsResolvedValues) {
  TempDir t;
  {
    std::ofstream f(t / "cfg.json");
    f << R"({"campaign": {"runs": 2, "steps": 10}, "features": {"n_mels": 30}})";
  }
  const auto r = vf({"--config", (t / "cfg.json").string(), "--set", "campaign.steps=20", "--jobs", "3", "config"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["campaign"]["runs"], 2);
  EXPECT_EQ(j["campaign"]["steps"], 20);
  EXPECT_EQ(j["features"]["n_mels"], 30);
  EXPECT_EQ(j["jobs"], 3);
}

TEST(CliBasics, ExplicitFlagsBeatTheConfigFile) {
  TempDir t;
  const auto r = vf({"--set", "campaign.runs=4", "--set", "campaign.steps=9", "campaign", "--runs", "2",
                     "--no-shapes", "--out", (t / "d").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = load(t / "d" / "summary.json");
  EXPECT_EQ(summary["runs"], 2);
  EXPECT_EQ(summary["steps"], 9);
  EXPECT_EQ(summary["attempted"], 18);
  EXPECT_FALSE(fs::exists(t / "d" / "shapes.jsonl"));
  const auto echo = load(t / "d" / "config.json");
  EXPECT_EQ(echo["campaign"]["runs"], 2);
  EXPECT_EQ(echo["campaign"]["write_shapes"], false);
}

TEST_F(Cli, CampaignWritesItsArtifacts) {
  for (const char* f : {"dataset.jsonl", "shapes.jsonl", "summary.json", "config.json"}) {
    EXPECT_TRUE(fs::exists(*root_ / "adult" / f)) << f;
  }
  const auto s = load(*root_ / "child" / "summary.json");
  EXPECT_EQ(s["model"], "child");
  EXPECT_EQ(s["attempted"], 200);
  EXPECT_GT(s["retained"].get<int>(), 0);
}

TEST_F(Cli, EvaluateAndSurface) {
  TempDir t;
  auto r = vf({"evaluate", "--dataset", at("adult"), "--targets", at("targets"), "--out", (t / "ev").string(),
               "--pairs", "mfcc12-mse,logmel-cos"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream f(t / "ev" / "results.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(f, line);) lines += !line.empty();
  EXPECT_EQ(lines, 50u);
  const auto manifest = load(t / "ev" / "evaluation.json");
  EXPECT_EQ(manifest["model"], "adult");
  EXPECT_EQ(manifest["pairs"].size(), 2u);

  r = vf({"surface", "--results", (t / "ev").string(), "--pair", "logmel-cos", "--vowel", "i", "--out",
          (t / "sf").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto grid = vocalfit::read_surface_csv(t / "sf" / "surface_adult_logmel-cos_i.csv");
  for (double v : grid) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const auto side = load(t / "sf" / "surface_adult_logmel-cos_i.json");
  EXPECT_EQ(side["vowel"], "i");

  r = vf({"surface", "--results", (t / "ev").string(), "--pair", "mfcc12-mse", "--vowel", "all", "--out",
          (t / "sf").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* v : {"a", "e", "i", "o", "u"}) {
    EXPECT_TRUE(fs::exists(t / "sf" / (std::string("surface_adult_mfcc12-mse_") + v + ".csv")));
  }

  r = vf({"surface", "--results", (t / "ev").string(), "--pair", "mfcc22-mse", "--vowel", "y", "--out",
          (t / "sf2").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = vf({"surface", "--results", at("adult"), "--pair", "mfcc22-mse", "--vowel", "a", "--out",
          (t / "sf3").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  r = vf({"evaluate", "--dataset", at("adult"), "--targets", at("targets"), "--out", at("adult")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  r = vf({"evaluate", "--dataset", at("adult"), "--targets", at("targets"), "--out", (t / "x").string(),
          "--pairs", "mfcc12-median"});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST_F(Cli, EmptyDatasetIsADataError) {
  TempDir t;
  auto r = vf({"campaign", "--runs", "1", "--steps", "0", "--out", (t / "empty").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = vf({"evaluate", "--dataset", (t / "empty").string(), "--targets", at("targets"), "--out",
          (t / "ev").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("EmptyRun"), std::string::npos);
  EXPECT_FALSE(fs::exists(t / "ev"));
}

TEST_F(Cli, ReportEndToEnd) {
  TempDir t;
  auto r = vf({"report", "--dataset", at("adult"), "--dataset", at("child"), "--targets", at("targets"),
               "--out", (t / "rep").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("adult: HF emphasis"), std::string::npos);
  EXPECT_NE(r.out.find("child: HF emphasis"), std::string::npos);
  const auto rep = load(t / "rep" / "report.json");
  EXPECT_EQ(rep["hf_impact"].size(), 6u);
  EXPECT_EQ(rep["metric_impact"].size(), 8u);
  EXPECT_EQ(rep["feature_impact"].size(), 30u);
  EXPECT_EQ(rep["annotations"].size(), 2u);
  for (const char* f : {"hf_impact.csv", "metric_impact.csv", "feature_impact.csv", "config.json"}) {
    EXPECT_TRUE(fs::exists(t / "rep" / f)) << f;
  }
  EXPECT_TRUE(fs::exists(t / "rep" / "evaluation_adult" / "results.jsonl"));

  // Re-aggregating saved results gives the same tables.
  r = vf({"report", "--results", (t / "rep" / "evaluation_adult").string(), "--results",
          (t / "rep" / "evaluation_child").string(), "--out", (t / "rep2").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(t / "rep2" / "report.json"), read_file(t / "rep" / "report.json"));

  r = vf({"report", "--out", (t / "rep3").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST_F(Cli, MushraPrepAndNormalize) {
  TempDir t;
  for (const char* model : {"adult", "child"}) {
    const auto r = vf({"evaluate", "--dataset", at(model), "--targets", at("targets"), "--out",
                       (t / (std::string("ev_") + model)).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  auto r = vf({"mushra", "prep", "--results", (t / "ev_adult").string(), "--results",
               (t / "ev_child").string(), "--out", (t / "study").string(), "--seed", "11"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto screens = vocalfit::manifest_from_json(load(t / "study" / "manifest.json"));
  ASSERT_EQ(screens.size(), 10u);
  for (const auto& s : screens) {
    EXPECT_EQ(s.rated_count(), 12u);
    for (const auto& st : s.stimuli) EXPECT_TRUE(fs::exists(t / "study" / st.wav));
  }

  json scores = json::array();
  for (const auto& s : screens) {
    json set = {{"rater_id", "r1"}, {"screen_id", s.screen_id}, {"scores", json::object()}};
    for (const auto& st : s.stimuli) {
      if (st.role == vocalfit::StimulusRole::Reference) continue;
      set["scores"][st.id] = st.role == vocalfit::StimulusRole::Anchor            ? 20
                             : st.role == vocalfit::StimulusRole::HiddenReference ? 90
                                                                                  : 55;
    }
    scores.push_back(set);
  }
  {
    std::ofstream f(t / "scores.jsonl");
    for (const auto& s : scores) f << s.dump() << "\n";
  }
  r = vf({"mushra", "normalize", "--manifest", (t / "study" / "manifest.json").string(), "--scores",
          (t / "scores.jsonl").string(), "--out", (t / "norm").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.err.empty()) << r.err;
  const auto norm = load(t / "norm" / "normalized.json");
  ASSERT_EQ(norm["rows"].size(), 120u);
  for (const auto& row : norm["rows"]) {
    const std::string role = row["role"];
    const double expect = role == "anchor" ? 0.0 : role == "hidden_reference" ? 1.0 : 0.5;
    EXPECT_EQ(row["normalized"].get<double>(), expect);
  }
  EXPECT_TRUE(fs::exists(t / "norm" / "normalized.csv"));

  scores[0]["scores"]["s01"] = 140;
  {
    std::ofstream f(t / "bad.json");
    f << scores.dump();
  }
  r = vf({"mushra", "normalize", "--manifest", (t / "study" / "manifest.json").string(), "--scores",
          (t / "bad.json").string(), "--out", (t / "norm2").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("s01"), std::string::npos);
}
