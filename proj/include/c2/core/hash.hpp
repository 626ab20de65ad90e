#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace c2 {

/// Incremental FNV-1a (64-bit). Values are fed in a fixed little-endian
/// byte order so digests are stable across builds.
class Fnv1a {
 public:
  static constexpr std::uint64_t kOffsetBasis = 14695981039346656037ULL;
  static constexpr std::uint64_t kPrime = 1099511628211ULL;

  Fnv1a& bytes(std::span<const std::uint8_t> data) noexcept {
    for (std::uint8_t b : data) {
      h_ ^= b;
      h_ *= kPrime;
    }
    return *this;
  }

  Fnv1a& u64(std::uint64_t v) noexcept {
    for (int i = 0; i < 8; ++i) {
      h_ ^= static_cast<std::uint8_t>(v >> (8 * i));
      h_ *= kPrime;
    }
    return *this;
  }

  Fnv1a& i64(std::int64_t v) noexcept { return u64(static_cast<std::uint64_t>(v)); }

  /// Hashes a real rounded to a 1e-6 grid, so the digest ignores
  /// representation noise below that resolution.
  Fnv1a& real_rounded(double v) noexcept { return i64(std::llround(v * 1e6)); }

  /// Hashes the exact bit pattern of a double.
  Fnv1a& real_exact(double v) noexcept { return u64(std::bit_cast<std::uint64_t>(v)); }

  Fnv1a& str(std::string_view s) noexcept {
    u64(s.size());
    for (char c : s) {
      h_ ^= static_cast<std::uint8_t>(c);
      h_ *= kPrime;
    }
    return *this;
  }

  std::uint64_t digest() const noexcept { return h_; }

 private:
  std::uint64_t h_ = kOffsetBasis;
};

}  // namespace c2
