#pragma once

#include <cstdint>
#include <random>

namespace bcskit {

// Purpose-named substreams. Every consumer of randomness in the library draws
// from its own stream so that adding draws in one place never perturbs another.
enum class Stream : std::uint64_t {
  Matrices = 1,  // sampling operators
  Probes = 2,    // Monte-Carlo divergence probes
  Weights = 3,   // network initialization
  General = 4,
};

// Deterministic generator: mt19937_64 (bit-stream pinned by the standard) with
// a hand-rolled Box-Muller for normals, since std::normal_distribution is
// implementation-defined. Identical seeds give identical sequences everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Substream derived from (seed, stream, index) via splitmix64 mixing.
  // stream(seed, s, i) and stream(seed, s, j) are independent for i != j.
  static Rng stream(std::uint64_t seed, Stream s, std::uint64_t index = 0);

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; pairs are cached.
  double normal();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// splitmix64 finalizer, exposed for seed derivation in tests.
std::uint64_t mix64(std::uint64_t z);

}  // namespace bcskit
