#pragma once

#include <array>
#include <cstdint>

namespace concmeter {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based stream keyed by (seed, sample index, coordinate index).
///
/// Every (seed, sample, coordinate) triple owns an independent stream, so a
/// batch can be generated in any order or partition and stay bit-identical.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t sample, std::uint32_t coordinate);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double normal();
  double exponential();
  /// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 uses the U^{1/a} boost.
  double gamma(double shape);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
};

/// Independent sub-seed for stream `tag` of a job seeded with `seed` (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace concmeter
