#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace samra {

/// Seedable random stream with platform-independent draws.
///
/// The standard library distributions are implementation-defined, so uniform,
/// normal and exponential variates are derived here directly from the raw
/// 64-bit output of mt19937_64. Independent purposes (fading, shadowing,
/// mobility, exploration, ...) get their own stream via derive(), so the order
/// in which subsystems consume randomness never changes another's draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Child stream keyed by a purpose label; the parent is not advanced.
  [[nodiscard]] static Rng derive(std::uint64_t seed, std::string_view purpose);
  [[nodiscard]] static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  double normal();
  double normal(double mean, double stddev);
  /// Exponential with unit mean.
  double exponential();

  [[nodiscard]] std::string serialize() const;
  void deserialize(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(std::string_view text);

}  // namespace samra
