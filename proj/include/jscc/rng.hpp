#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace jscc {

// Deterministic random stream. Every stochastic routine in the library draws
// from one of these, so a run is reproducible from its seeds alone. Uniform
// and normal variates are derived from the raw 64-bit engine output with our
// own transforms; the standard library's distribution objects are avoided
// because their output is not pinned across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform draw from [0, bound). Modulo bias is below 2^-10 even for bounds
  // near 2^54, far past anything a dataset index needs.
  std::uint64_t integer(std::uint64_t bound) { return engine_() % bound; }

  // Open-interval uniform on (0, 1); never returns an endpoint, so logs and
  // logits of the result are always finite.
  double uniform() {
    double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // Standard normal via Box-Muller. No caching of the second variate: one
  // draw consumes exactly two engine outputs, which keeps draw accounting
  // obvious when reasoning about reproducibility.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Independent substream identified by a tag. Derivation uses the original
  // seed, not the current engine state, so the substream does not depend on
  // how many draws the parent has made.
  Rng child(std::uint64_t tag) const { return Rng(mix(seed_ ^ (0x9e3779b97f4a7c15ull * (tag + 1)))); }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Seed for element `index` of a sweep rooted at `root`. Literal XOR is the
// splitting rule used by every sweep in this project; it is documented in the
// README so results can be reproduced point by point.
inline std::uint64_t sweep_seed(std::uint64_t root, std::uint64_t index) { return root ^ index; }

}  // namespace jscc
