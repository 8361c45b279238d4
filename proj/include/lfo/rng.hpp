#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace lfo {

// Deterministic RNG used throughout training. All distributions are generated
// from explicit formulas (not std:: distributions) so that a fixed seed yields
// the same sample stream on every build of the same binary.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  // Standard normal via Box-Muller (cosine branch only; keeps the stream
  // stateless between calls).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Fresh seed for a derived stream. Mixes the tag so that independent
  // components of a run (init, collection, batching, ...) draw from
  // non-overlapping streams.
  static std::uint64_t derive(std::uint64_t seed, std::string_view tag) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    for (const char c : tag) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0xff51afd7ed558ccdULL;
      h ^= h >> 33;
    }
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return h;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lfo
