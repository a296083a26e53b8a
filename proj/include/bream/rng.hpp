#pragma once

#include <cstdint>
#include <random>

namespace bream {

/// Seeded random generator with a pinned draw algorithm.
///
/// All stochastic code in the library draws through this wrapper so that
/// results are reproducible across platforms and standard-library versions.
/// The generator is mt19937_64; uniform doubles are produced as
/// (x >> 11) * 2^-53, giving values in [0, 1). Bounded integers use plain
/// modulo reduction. Neither std::uniform_real_distribution nor
/// std::shuffle is used anywhere, since their draw counts are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1); consumes exactly one engine draw.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [-scale, +scale].
  double uniform_symmetric(double scale) {
    return (2.0 * uniform() - 1.0) * scale;
  }

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t below(std::uint64_t bound) { return gen_() % bound; }

  /// Independent stream keyed by (master seed, stream id).
  static Rng derive(std::uint64_t master, std::uint64_t stream) {
    return Rng(mix(master ^ mix(stream + 0x9e3779b97f4a7c15ULL)));
  }

  /// splitmix64 finalizer; also used as the library's stable 64-bit mixer.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 gen_;
};

/// FNV-1a over raw bytes; used for dataset fingerprints and per-example
/// rng streams keyed by example content.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace bream
