#pragma once

#include <cstdint>
#include <random>

namespace plltm {

// Deterministic random source. The sampler only ever consumes 53-bit
// uniforms produced here, so a chain's trajectory is reproducible from the
// seed alone. Distribution objects from <random> (gamma, poisson) are used
// on top of engine() where trajectory identity is not required.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 bits of entropy, one engine draw.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform index in [0, n). Requires n >= 1.
  std::uint32_t next_index(std::uint32_t n) {
    auto i = static_cast<std::uint32_t>(next_double() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer, used to derive independent per-document and
// per-chain streams from one base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) {
  std::uint64_t x = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^
                    (b * 0xbf58476d1ce4e5b9ULL + (b ? 1 : 0));
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace plltm
