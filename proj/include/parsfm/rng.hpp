#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace parsfm {

/// splitmix64 round; used to derive stream seeds from (base, tag...) tuples.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a) {
  return mix_seed(base ^ mix_seed(a));
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(base, a), b);
}

// Seeded random source. All samplers are built from raw mt19937_64 output so
// that sequences are identical across standard library implementations
// (std::*_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix_seed(seed)) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int needs n > 0");
    return eng_() % n;
  }

  /// Standard normal via Box-Muller (one value per draw).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Eigen::Vector3d normal3(double sigma) {
    return {sigma * normal(), sigma * normal(), sigma * normal()};
  }

  Eigen::Vector3d uniform_box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi) {
    return {uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z())};
  }

  Eigen::Vector3d unit_vector() {
    Eigen::Vector3d v;
    do {
      v = normal3(1.0);
    } while (v.norm() < 1e-12);
    return v.normalized();
  }

  /// Uniform rotation (Shoemake's subgroup algorithm).
  Eigen::Quaterniond rotation() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double u3 = uniform();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    return Eigen::Quaterniond(a * std::sin(2.0 * M_PI * u2), a * std::cos(2.0 * M_PI * u2),
                              b * std::sin(2.0 * M_PI * u3), b * std::cos(2.0 * M_PI * u3))
        .normalized();
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace parsfm
