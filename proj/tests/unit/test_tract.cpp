#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "vocalfit/error.hpp"
#include "vocalfit/tract.hpp"

using namespace vocalfit;
using vocalfit::testing::Gen;

namespace {

double sum_lengths(const AreaFunction& a) {
  return std::accumulate(a.sections.begin(), a.sections.end(), 0.0,
                         [](double s, const TubeSection& t) { return s + t.length_cm; });
}

std::pair<double, double> area_extent(const AreaFunction& a) {
  auto [lo, hi] = std::minmax_element(a.sections.begin(), a.sections.end(),
                                      [](const auto& x, const auto& y) { return x.area_cm2 < y.area_cm2; });
  return {lo->area_cm2, hi->area_cm2};
}

}  // namespace

TEST(Tract, ParameterTableHasEightClosedRanges) {
  const auto& r = param_ranges();
  ASSERT_EQ(r.size(), 8u);
  EXPECT_EQ(r[0].name, "jaw_opening");
  EXPECT_DOUBLE_EQ(r[1].lo, 0.15);
  EXPECT_DOUBLE_EQ(r[1].hi, 0.9);
  EXPECT_DOUBLE_EQ(r[4].lo, 0.05);
  EXPECT_DOUBLE_EQ(r[4].hi, 4.0);
  EXPECT_DOUBLE_EQ(r[6].lo, 0.5);
  EXPECT_DOUBLE_EQ(r[6].hi, 1.5);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_DOUBLE_EQ(neutral_params()[i], 0.5 * (r[i].lo + r[i].hi));
  }
}

TEST(Tract, NeutralAdultIsNearUniformSchwaTube) {
  const AreaFunction a = shape_to_area(VocalTractShape{});
  ASSERT_EQ(a.sections.size(), kNumSections);
  EXPECT_NEAR(a.total_length_cm, 17.5, 1e-12);
  const auto [lo, hi] = area_extent(a);
  EXPECT_GE(lo, 2.0);
  EXPECT_LE(hi, 3.0);
  EXPECT_LE(hi / lo, 1.5);
}

TEST(Tract, NeutralChildIsScaledAdult) {
  VocalTractShape child;
  child.model = Model::Child;
  const AreaFunction adult = shape_to_area(VocalTractShape{});
  const AreaFunction c = shape_to_area(child);
  EXPECT_NEAR(c.total_length_cm, 12.25, 1e-12);
  ASSERT_EQ(c.sections.size(), adult.sections.size());
  for (std::size_t i = 0; i < c.sections.size(); ++i) {
    EXPECT_DOUBLE_EQ(c.sections[i].length_cm, adult.sections[i].length_cm * 0.7);
    EXPECT_DOUBLE_EQ(c.sections[i].area_cm2, adult.sections[i].area_cm2 * 0.75);
  }
}

TEST(Tract, FullConstrictionReachesClosureFloorAtItsPosition) {
  VocalTractShape s;
  at(s.params, Param::TongueDegree) = 1.0;
  at(s.params, Param::TonguePosition) = 0.5;
  const AreaFunction a = shape_to_area(s);
  EXPECT_LE(a.min_area_cm2(), 0.05);
  EXPECT_NEAR(static_cast<double>(a.min_area_index()), 20.0, 1.0);
}

TEST(Tract, FullConstrictionClosesAnywhere) {
  for (int k = 0; k <= 15; ++k) {
    const double pos = 0.15 + 0.05 * k;
    VocalTractShape s;
    at(s.params, Param::TongueDegree) = 1.0;
    at(s.params, Param::TonguePosition) = pos;
    const AreaFunction a = shape_to_area(s);
    EXPECT_LE(a.min_area_cm2(), 0.05) << "position " << pos;
    EXPECT_FALSE(prefilter_shape(a));
  }
}

TEST(Tract, RejectsOutOfRangeShape) {
  VocalTractShape s;
  at(s.params, Param::LipArea) = 5.0;
  EXPECT_THROW(shape_to_area(s), Error);
  at(s.params, Param::LipArea) = std::nan("");
  EXPECT_THROW(shape_to_area(s), Error);
}

TEST(Tract, AreaFunctionInvariantsOnRandomShapes) {
  Gen gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    VocalTractShape s;
    s.params = gen.params();
    for (Model m : {Model::Adult, Model::Child}) {
      s.model = m;
      const AreaFunction a = shape_to_area(s);
      ASSERT_EQ(a.sections.size(), kNumSections);
      EXPECT_NEAR(a.total_length_cm, sum_lengths(a), 1e-9);
      for (const auto& t : a.sections) {
        EXPECT_GE(t.area_cm2, 0.0);
        EXPECT_GT(t.length_cm, 0.0);
      }
      if (m == Model::Adult) {
        EXPECT_GE(a.total_length_cm, 14.0);
        EXPECT_LE(a.total_length_cm, 20.0);
      }
    }
  }
}

TEST(Tract, ChildToAdultLengthRatioIsTheScale) {
  Gen gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    VocalTractShape s;
    s.params = gen.params();
    const double adult = shape_to_area(s).total_length_cm;
    s.model = Model::Child;
    const double child = shape_to_area(s).total_length_cm;
    EXPECT_DOUBLE_EQ(child / adult, 0.7);
  }
}

TEST(Tract, AreaFunctionRejectsBadSections) {
  EXPECT_THROW(AreaFunction::from_sections({}), Error);
  EXPECT_THROW(AreaFunction::from_sections({{-1.0, 1.0}}), Error);
  EXPECT_THROW(AreaFunction::from_sections({{1.0, 0.0}}), Error);
}

TEST(Tract, WalkStartsAtNeutral) {
  const auto one = sample_walk(Model::Adult, 1, 1, 42);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].params, neutral_params());
  EXPECT_EQ(one[0].run_id, 0);
  EXPECT_EQ(one[0].step_id, 0);
}

TEST(Tract, HalfMillionStepWalkShape) {
  const auto shapes = sample_walk(Model::Adult, 5, 100000, 3);
  ASSERT_EQ(shapes.size(), 500000u);
  for (int r = 0; r < 5; ++r) {
    const auto& first = shapes[static_cast<std::size_t>(r) * 100000];
    EXPECT_EQ(first.run_id, r);
    EXPECT_EQ(first.step_id, 0);
    EXPECT_EQ(first.params, neutral_params());
    EXPECT_EQ(shapes[static_cast<std::size_t>(r) * 100000 + 99999].step_id, 99999);
  }
}

TEST(Tract, WalkIsDeterministicAndRunsAreIndependentSubstreams) {
  const auto a = sample_walk(Model::Child, 3, 500, 9);
  const auto b = sample_walk(Model::Child, 3, 500, 9);
  ASSERT_EQ(a, b);
  for (int r = 0; r < 3; ++r) {
    const auto run = sample_run(Model::Child, r, 500, 9);
    EXPECT_TRUE(std::equal(run.begin(), run.end(), a.begin() + r * 500));
  }
  // A run does not depend on how many runs are requested.
  const auto more = sample_walk(Model::Child, 5, 500, 9);
  EXPECT_TRUE(std::equal(a.begin(), a.end(), more.begin()));
  const auto other = sample_walk(Model::Child, 3, 500, 10);
  EXPECT_NE(a, other);
}

TEST(Tract, WalkStaysInsideRanges) {
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    const auto shapes = sample_walk(Model::Adult, 2, 10000, seed);
    for (const auto& s : shapes) ASSERT_TRUE(params_in_range(s.params));
  }
}

TEST(Tract, WalkStepsAreGaussianSized) {
  const TractOptions opts;
  const auto shapes = sample_walk(Model::Adult, 1, 20000, 5);
  const auto& r = param_ranges();
  std::size_t ok = 0, total = 0;
  for (std::size_t i = 1; i < shapes.size(); ++i) {
    bool within = true;
    for (std::size_t k = 0; k < kNumParams; ++k) {
      const double step = std::abs(shapes[i].params[k] - shapes[i - 1].params[k]);
      within = within && step <= 6.0 * opts.walk_sigma * (r[k].hi - r[k].lo);
    }
    ok += within;
    ++total;
  }
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(total), 0.999);
}

TEST(Tract, WalkExploresTheWholeRange) {
  const auto shapes = sample_walk(Model::Adult, 1, 4000, 8);
  const auto& r = param_ranges();
  for (std::size_t k = 0; k < kNumParams; ++k) {
    double lo = 1e9, hi = -1e9;
    for (const auto& s : shapes) {
      lo = std::min(lo, s.params[k]);
      hi = std::max(hi, s.params[k]);
    }
    EXPECT_LT(lo, r[k].lo + 0.1 * (r[k].hi - r[k].lo)) << r[k].name;
    EXPECT_GT(hi, r[k].hi - 0.1 * (r[k].hi - r[k].lo)) << r[k].name;
  }
}

TEST(Tract, UniformModeStartsNeutralThenDrawsIndependently) {
  TractOptions opts;
  opts.sampling = SamplingMode::Uniform;
  const auto shapes = sample_walk(Model::Adult, 1, 2000, 4, opts);
  EXPECT_EQ(shapes[0].params, neutral_params());
  double mean_jump = 0.0;
  for (std::size_t i = 2; i < shapes.size(); ++i) {
    mean_jump += std::abs(shapes[i].params[0] - shapes[i - 1].params[0]);
    ASSERT_TRUE(params_in_range(shapes[i].params));
  }
  mean_jump /= static_cast<double>(shapes.size() - 2);
  // E|U - U'| = 1/3 for independent uniforms on [0, 1].
  EXPECT_NEAR(mean_jump, 1.0 / 3.0, 0.03);
}

TEST(Tract, PrefilterThresholdIsInclusive) {
  EXPECT_TRUE(prefilter_shape(shape_to_area(VocalTractShape{})));

  std::vector<TubeSection> s(40, {2.0, 17.5 / 40});
  s[10].area_cm2 = 0.03;
  EXPECT_FALSE(prefilter_shape(AreaFunction::from_sections(s)));
  s[10].area_cm2 = 0.1;
  EXPECT_TRUE(prefilter_shape(AreaFunction::from_sections(s)));
  s[10].area_cm2 = std::nextafter(0.1, 0.0);
  EXPECT_FALSE(prefilter_shape(AreaFunction::from_sections(s)));
}

TEST(Tract, VelumIsAcousticallyInert) {
  Gen gen(3);
  for (int i = 0; i < 50; ++i) {
    VocalTractShape a;
    a.params = gen.params();
    VocalTractShape b = a;
    at(b.params, Param::Velum) = gen.uniform(0.0, 1.0);
    const auto fa = shape_to_area(a), fb = shape_to_area(b);
    for (std::size_t k = 0; k < kNumSections; ++k) {
      EXPECT_EQ(fa.sections[k].area_cm2, fb.sections[k].area_cm2);
    }
  }
}

TEST(Tract, ShapeJsonRoundTrip) {
  Gen gen(4);
  VocalTractShape s;
  s.params = gen.params();
  s.model = Model::Child;
  s.run_id = 3;
  s.step_id = 1234;
  const auto j = shape_to_json(s);
  EXPECT_EQ(j.at("model"), "child");
  EXPECT_EQ(j.at("params").size(), 8u);
  EXPECT_EQ(shape_from_json(nlohmann::json::parse(j.dump())), s);
}
