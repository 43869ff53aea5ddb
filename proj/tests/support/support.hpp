#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vocalfit/acoustics.hpp"
#include "vocalfit/pipeline.hpp"
#include "vocalfit/targets.hpp"
#include "vocalfit/tract.hpp"

namespace vocalfit::testing {

// Directory removed with its contents on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "vocalfit");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Small generator kit for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double uniform() { return uniform(0.0, 1.0); }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(engine_); }
  double normal(double mean, double sd) { return mean + normal(sd); }
  std::vector<double> vector(std::size_t n, double lo = -5.0, double hi = 5.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  ParamVector params() {
    ParamVector p{};
    const auto& r = param_ranges();
    for (std::size_t i = 0; i < kNumParams; ++i) p[i] = uniform(r[i].lo, r[i].hi);
    return p;
  }
  // Smooth random open tract: a few cosine modes on a log-area profile.
  AreaFunction open_area(double length_cm = 17.5, std::size_t sections = 40) {
    const double a1 = uniform(-0.6, 0.6), a2 = uniform(-0.5, 0.5), a3 = uniform(-0.3, 0.3);
    const double base = uniform(0.6, 1.4);
    std::vector<TubeSection> s(sections);
    for (std::size_t i = 0; i < sections; ++i) {
      const double x = (i + 0.5) / sections;
      const double la = base + a1 * std::cos(3.14159265358979 * x) +
                        a2 * std::cos(2 * 3.14159265358979 * x) +
                        a3 * std::cos(3 * 3.14159265358979 * x);
      s[i] = {std::exp(la), length_cm / sections};
    }
    return AreaFunction::from_sections(std::move(s));
  }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// A small campaign plus default targets in a temporary directory.
struct SmallStudy {
  TempDir dir{"vocalfit-study"};
  Dataset dataset;
  TargetSet targets;
};

std::unique_ptr<SmallStudy> make_small_study(Model model, int runs, int steps, std::uint64_t seed);

AreaFunction uniform_tube(double length_cm, double area_cm2, std::size_t sections = 40);

std::string read_file(const std::filesystem::path& path);

}  // namespace vocalfit::testing
