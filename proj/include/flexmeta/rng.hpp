#pragma once

#include <array>
#include <cstdint>

namespace flexmeta {

// xoshiro256++ seeded through splitmix64. Self-contained so that draw
// sequences are identical across platforms and standard libraries; the
// distribution samplers below consume a fixed number of uniforms per call
// path, which keeps seeded runs reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (two uniforms per draw).
  double normal();

  /// Exponential with rate 1.
  double exponential();

  /// Gamma(shape, scale 1) via Marsaglia-Tsang.
  double gamma(double shape);

  double beta(double a, double b);
  double chi_square(double nu);
  double student_t(double nu);

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace flexmeta
