#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

namespace fflogo {

/// Mixes a 64-bit value into a stream-independent seed (splitmix64 step).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed for a named sub-stream, so independent stages never
/// share draws even when built from the same master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream));
}

/**
 * @brief Deterministic random source.
 *
 * mt19937_64 supplies the bit stream (fully specified by the standard); the
 * value mappings below are spelled out here instead of relying on
 * std::*_distribution, whose algorithms vary between standard libraries:
 *  - uniform double: (x >> 11) * 2^-53, giving [0, 1)
 *  - normal: Box-Muller on two uniforms, with the spare value cached
 *  - bounded int: multiply-shift on the full 64-bit draw
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  Eigen::Vector3d normal_vector3(double sigma) {
    return {sigma * normal(), sigma * normal(), sigma * normal()};
  }

  /// Uniformly distributed direction on the unit sphere.
  Eigen::Vector3d unit_vector3() {
    Eigen::Vector3d v;
    do {
      v = normal_vector3(1.0);
    } while (v.norm() < 1e-12);
    return v.normalized();
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fflogo
