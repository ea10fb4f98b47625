//
// Copyright 2026 The ldpcrowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDPCROWD_RANDOM_HPP_
#define LDPCROWD_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace ldpcrowd {

// Stateless 64-bit mixer (splitmix64). Used to derive independent stream
// seeds from a master seed plus structural coordinates so that adding grid
// points never shifts the randomness of existing ones.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x51ECAF1D66D18377ULL;
  for (uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

// Seeded random stream. One instance per worker / per repetition; instances
// are cheap and never shared across threads.
class RandomSource {
 public:
  explicit RandomSource(uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  // Uniform integer on [lo, hi], both ends included.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(engine_);
  }

  double gaussian(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Zero-centered Laplace draw via inverse CDF; E|X| = scale.
  double laplace(double scale) {
    double u = uniform();
    while (u == 0.0) u = uniform();  // avoid log(0) at the left edge
    return u < 0.5 ? scale * std::log(2.0 * u) : -scale * std::log(2.0 * (1.0 - u));
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Test hook: mechanisms draw additive noise through this switch so tests can
// pin noise to zero while keeping every other random choice live. Matrix-level
// entry points never expose it; they always run with real noise.
enum class NoiseMode { kLaplace, kZero };

inline double draw_noise(NoiseMode mode, double scale, RandomSource& rng) {
  return mode == NoiseMode::kLaplace ? rng.laplace(scale) : 0.0;
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_RANDOM_HPP_
