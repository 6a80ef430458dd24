#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace trojatensor {

// Counter-based random number generation. Every value is a pure function of
// (key, counter); streams derived from distinct keys are independent, and any
// stream can be regenerated without replaying the others. This is what makes
// zoos reproducible and order-independent: workers can fill a tensor block in
// any order and still produce bit-identical bytes.

constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view tag) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Derives an independent stream key from a parent key and an integer salt.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t salt) noexcept {
  return mix64(key + kGolden64 * (salt + 1));
}

/// Derives an independent stream key from a parent key and a tag string.
constexpr std::uint64_t derive_key(std::uint64_t key, std::string_view tag) noexcept {
  return mix64(key ^ fnv1a(tag));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden64); }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double next_normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1]
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace trojatensor
