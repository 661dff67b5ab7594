// License: Apache 2.0. See LICENSE file in root directory.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace depthcal {

/// Algorithm tag written into dataset metadata. Datasets are reproducible
/// across implementations only when the generator matches.
inline constexpr const char* kRngAlgorithm = "mt19937_64/box-muller";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for (dataset seed, frame index): frames can be generated in
/// parallel without changing the output.
inline std::uint64_t derive_stream_seed(std::uint64_t seed,
                                        std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed2701ULL));
}

/// Standard-normal stream: mt19937_64 uniforms through the basic Box-Muller
/// transform (std::normal_distribution is implementation-defined, this is
/// pinned). Consumes exactly two uniforms per pair of normals.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01_positive();
    const double u2 = uniform01_positive();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

 private:
  // 53-bit uniform in (0, 1].
  double uniform01_positive() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 gen_;
  double cached_{0.0};
  bool has_cached_{false};
};

}  // namespace depthcal
