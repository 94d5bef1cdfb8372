#pragma once

// Deterministic random streams.
//
// Every draw in the library comes from a RandomStream that is positioned by a
// (master seed, stream index) pair. Streams never share state, so columns of a
// matrix or trials of an experiment can be produced in any order, on any
// number of workers, with bit-identical results.

#include <cstdint>
#include <random>
#include <string_view>

namespace htrip {

inline constexpr std::string_view kGeneratorId = "mt19937_64+splitmix64/v1";

/// SplitMix64 finalizer; used only to decorrelate seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the independent stream number `index` under `master_seed`.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t index)
      : engine_(derive_seed(master_seed, index)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0,1); 53-bit resolution, endpoints never
  /// produced.
  double uniform_open() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Fair coin: +1 or -1.
  double sign() { return (engine_() >> 63) != 0 ? 1.0 : -1.0; }

  /// Uniform integer in [0, bound); Lemire's nearly-divisionless method so the
  /// mapping does not depend on the standard library's distribution code.
  std::uint64_t uniform_index(std::uint64_t bound) {
    __uint128_t m = static_cast<__uint128_t>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<__uint128_t>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace htrip
