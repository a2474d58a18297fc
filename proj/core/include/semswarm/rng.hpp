#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <string_view>

namespace semswarm {

/// Seedable generator with a portable output sequence.
///
/// The engine is std::mt19937_64, whose output is fixed by the standard.
/// Library distributions are implementation-defined, so uniform and normal
/// variates are derived here from raw 64-bit draws (53-bit mantissa uniforms,
/// Marsaglia polar method for normals). The algorithm id is written into run
/// logs so a log can be matched with the generator that produced it.
class Rng {
 public:
  static constexpr std::string_view kAlgorithmId = "mt19937_64+polar/v1";

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in (0, 1].
  double uniform_open_closed() { return 1.0 - uniform(); }

  /// Uniform integer in [0, n). Uses rejection to stay unbiased.
  std::uint64_t below(std::uint64_t n);

  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// splitmix64 finalizer; used to mix seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a base seed and an ordered list of salts.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> salts) {
  std::uint64_t h = mix64(base);
  for (auto s : salts) h = mix64(h ^ mix64(s + 0x632be59bd9b4e019ULL));
  return h;
}

/// 64-bit FNV-1a over a byte range.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace semswarm
