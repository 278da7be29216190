#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "smb/core.hpp"
#include "smb/problems.hpp"

namespace smb::detail {

// Portable draws; the std distributions are implementation-defined and would
// make synthetic problems differ between standard libraries.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, RngStream stream, std::uint64_t counter)
      : gen_(mix_key(seed, static_cast<std::uint64_t>(stream), counter)) {}

  double uniform() { return unit_uniform(gen_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace smb::detail
