#pragma once

// Word-level kernels behind BinaryMask. Bit p of a row lives in word p/64 at
// bit position p%64, so "shift toward higher x" is a left shift.
//
// Every variant must produce bit-identical output to the scalar reference;
// tests/simd_equivalence_test.cpp holds them to that.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace stemtrace::simd {

struct PopCounts {
  std::uint64_t both = 0;       // pred & gt
  std::uint64_t only_pred = 0;  // pred & ~gt
  std::uint64_t only_gt = 0;    // ~pred & gt

  friend bool operator==(const PopCounts&, const PopCounts&) = default;
};

struct Kernels {
  std::string_view name;

  // dst[i] |= src[i] for i < n.
  void (*or_words)(std::uint64_t* dst, const std::uint64_t* src, std::size_t n);

  // For every bit position p in [0, 64n) with 0 <= p - shift < 64n:
  // dst bit p |= src bit (p - shift). Bits leaving the range are dropped.
  // dst and src must not overlap.
  void (*or_shifted)(std::uint64_t* dst, const std::uint64_t* src, std::size_t n,
                     std::ptrdiff_t shift);

  PopCounts (*confusion)(const std::uint64_t* pred, const std::uint64_t* gt, std::size_t n);

  std::uint64_t (*popcount)(const std::uint64_t* words, std::size_t n);

  // Bit i = (bytes[i] >= 128) for i < count; writes ceil(count/64) words and
  // leaves the unused high bits of the last word zero.
  void (*pack_threshold)(const std::uint8_t* bytes, std::size_t count, std::uint64_t* words);

  // bytes[i] = bit i ? 255 : 0 for i < count.
  void (*unpack)(const std::uint64_t* words, std::size_t count, std::uint8_t* bytes);
};

const Kernels& scalar_kernels() noexcept;

/// nullptr when the variant is not compiled in or the CPU lacks it.
const Kernels* avx2_kernels() noexcept;
const Kernels* neon_kernels() noexcept;

/// Best available variant. STEMTRACE_SIMD=scalar|avx2|neon in the environment
/// pins the choice (unavailable requests fall back to scalar).
const Kernels& active_kernels() noexcept;

}  // namespace stemtrace::simd
