#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

namespace vocalfit::detail {

// mt19937_64 is fully specified by the standard; the distributions are not,
// so uniform and normal deviates are derived here by hand to keep streams
// identical across standard libraries.
class Rng {
 public:
  Rng(std::initializer_list<std::uint64_t> key) {
    const auto words = split(key);
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t next() { return engine_(); }

 private:
  static std::vector<std::uint32_t> split(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    for (std::uint64_t k : key) {
      words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    return words;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vocalfit::detail
