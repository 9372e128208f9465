#ifndef SVL_RNG_HPP_
#define SVL_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>

namespace svl {

/// Per-chain random number generator. Each chain owns exactly one; seeds for
/// independent streams are derived with mix_seed() rather than by sharing.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  double gamma(double shape, double rate);
  double beta(double a, double b);
  bool coin() { return (engine_() >> 63) != 0; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Order-dependent combination of two 64-bit values into a new seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Stable across platforms (FNV-1a), unlike std::hash.
std::uint64_t hash_string(std::string_view text);

/// Bit pattern of a double, with -0.0 folded onto 0.0.
std::uint64_t hash_double(double x);

}  // namespace svl

#endif  // SVL_RNG_HPP_
