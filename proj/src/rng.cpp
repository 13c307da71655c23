#include "polyp/rng.hpp"

#include <cmath>
#include <numbers>

namespace polyp {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// High 64 bits of a 64x64 multiply, via 32-bit halves. Avoids __int128 so
// the sequence is identical on any conforming compiler.
std::uint64_t mulhi64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t a_lo = a & 0xFFFFFFFFULL, a_hi = a >> 32;
  std::uint64_t b_lo = b & 0xFFFFFFFFULL, b_hi = b >> 32;
  std::uint64_t p0 = a_lo * b_lo;
  std::uint64_t p1 = a_lo * b_hi;
  std::uint64_t p2 = a_hi * b_lo;
  std::uint64_t p3 = a_hi * b_hi;
  std::uint64_t carry = ((p0 >> 32) + (p1 & 0xFFFFFFFFULL) + (p2 & 0xFFFFFFFFULL)) >> 32;
  return p3 + (p1 >> 32) + (p2 >> 32) + carry;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t RandomStream::next_u64() {
  counter_ += 1;
  return mix64(seed_ + counter_ * kGolden);
}

double RandomStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::next_below(std::uint64_t bound) {
  return bound == 0 ? 0 : mulhi64(next_u64(), bound);
}

double RandomStream::next_normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

RandomStream RandomStream::split(std::uint64_t key) const {
  return RandomStream(mix64(seed_ + kGolden + mix64(key + kGolden)));
}

RandomStream RandomStream::split(std::string_view key) const {
  return split(fnv1a(key));
}

std::vector<std::size_t> RandomStream::sample_without_replacement(
    std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(next_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace polyp
