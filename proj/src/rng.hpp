#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace deepauction {

// Seeded random source used everywhere in the library. The engine is
// std::mt19937_64 (fully specified by the standard) and all real-valued
// draws go through the explicit mappings below instead of the standard
// distributions, whose output is implementation-defined. This keeps
// golden tests stable across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with the given mean, via inverse CDF.
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  std::size_t index(std::size_t bound) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(bound)) %
           bound;
  }

  // Derives an independent, reproducible stream for a named purpose
  // (e.g. "shuffle", "misreports"). Mixing is splitmix64 over the base
  // seed and an FNV-1a hash of the tag.
  Rng fork(std::string_view tag, std::uint64_t index = 0) const {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    std::uint64_t x = seed_ ^ h ^ (0x9e3779b97f4a7c15ull * (index + 1));
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    x = x ^ (x >> 31);
    return Rng(x);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace deepauction
