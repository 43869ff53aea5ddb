#include "support.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace vocalfit::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& prefix) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (prefix + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

AreaFunction uniform_tube(double length_cm, double area_cm2, std::size_t sections) {
  std::vector<TubeSection> s(sections, {area_cm2, length_cm / static_cast<double>(sections)});
  return AreaFunction::from_sections(std::move(s));
}

std::unique_ptr<SmallStudy> make_small_study(Model model, int runs, int steps, std::uint64_t seed) {
  auto study = std::make_unique<SmallStudy>();
  CampaignConfig c;
  c.model = model;
  c.runs = runs;
  c.steps = steps;
  c.seed = seed;
  c.out_dir = study->dir / "dataset";
  c.write_shapes = false;
  run_campaign(c);
  study->dataset = load_dataset(c.out_dir);
  study->targets = make_default_targets(study->dir / "targets", {}, {}, {});
  return study;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace vocalfit::testing
