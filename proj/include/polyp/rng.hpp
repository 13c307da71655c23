#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace polyp {

// Deterministic, platform-independent pseudo-random stream.
//
// The generator is SplitMix64 written in counter form: draw i returns
// mix64(seed + (i + 1) * kGolden) where mix64 is the SplitMix64 finalizer.
// Every stochastic step of the pipeline draws from one of these streams,
// so a run is fully reproducible from its seed on any platform.
//
// Streams are single-owner. Parallel consumers get independent child
// streams via split(), never a shared reference.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double next_double();

  // Uniform in [0, bound). Scaled 128-bit multiply; the modulo bias is
  // below 2^-64 and the draw count is always exactly one.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard normal via Box-Muller. Consumes exactly two draws.
  double next_normal();

  // Independent child stream. Children with distinct keys are decorrelated
  // from each other and from the parent; derivation is pure, so the same
  // (seed, key) pair names the same stream on every platform.
  RandomStream split(std::uint64_t key) const;
  RandomStream split(std::string_view key) const;  // key hashed with FNV-1a

  // Fisher-Yates. std::shuffle is not stable across standard libraries,
  // this is.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in shuffled order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace polyp
