// Built only for aarch64, where Advanced SIMD is architecturally guaranteed.
#include <arm_neon.h>

#include <bit>

#include "stemtrace/simd/kernels.hpp"

namespace stemtrace::simd {

namespace {

inline std::uint64_t popcount_pair(uint64x2_t v) {
  return vaddlvq_u8(vcntq_u8(vreinterpretq_u8_u64(v)));
}

void or_words(std::uint64_t* dst, const std::uint64_t* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_u64(dst + i, vorrq_u64(vld1q_u64(dst + i), vld1q_u64(src + i)));
  for (; i < n; ++i) dst[i] |= src[i];
}

void or_shifted(std::uint64_t* dst, const std::uint64_t* src, std::size_t n, std::ptrdiff_t shift) {
  const auto words = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t q = shift >= 0 ? shift / 64 : -((-shift + 63) / 64);
  const unsigned b = static_cast<unsigned>(shift - q * 64);

  auto scalar_word = [&](std::ptrdiff_t i) {
    const std::ptrdiff_t lo = i - q;
    const std::ptrdiff_t carry = lo - 1;
    std::uint64_t v = 0;
    if (lo >= 0 && lo < words) v |= src[lo] << b;
    if (b != 0 && carry >= 0 && carry < words) v |= src[carry] >> (64 - b);
    dst[i] |= v;
  };

  std::ptrdiff_t begin = q + 1 > 0 ? q + 1 : 0;
  std::ptrdiff_t end = words + q - 1 < words ? words + q - 1 : words;
  if (begin > words) begin = words;
  if (end < begin) end = begin;

  for (std::ptrdiff_t i = 0; i < begin; ++i) scalar_word(i);
  // vshlq with a negative count shifts right; -64 yields zero, covering b == 0.
  const int64x2_t left = vdupq_n_s64(static_cast<std::int64_t>(b));
  const int64x2_t right = vdupq_n_s64(static_cast<std::int64_t>(b) - 64);
  std::ptrdiff_t i = begin;
  for (; i + 2 <= end; i += 2) {
    const uint64x2_t lo = vshlq_u64(vld1q_u64(src + (i - q)), left);
    const uint64x2_t hi = vshlq_u64(vld1q_u64(src + (i - q - 1)), right);
    vst1q_u64(dst + i, vorrq_u64(vld1q_u64(dst + i), vorrq_u64(lo, hi)));
  }
  for (; i < words; ++i) scalar_word(i);
}

PopCounts confusion(const std::uint64_t* pred, const std::uint64_t* gt, std::size_t n) {
  PopCounts c;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t p = vld1q_u64(pred + i);
    const uint64x2_t g = vld1q_u64(gt + i);
    c.both += popcount_pair(vandq_u64(p, g));
    c.only_pred += popcount_pair(vbicq_u64(p, g));
    c.only_gt += popcount_pair(vbicq_u64(g, p));
  }
  for (; i < n; ++i) {
    c.both += static_cast<std::uint64_t>(std::popcount(pred[i] & gt[i]));
    c.only_pred += static_cast<std::uint64_t>(std::popcount(pred[i] & ~gt[i]));
    c.only_gt += static_cast<std::uint64_t>(std::popcount(~pred[i] & gt[i]));
  }
  return c;
}

std::uint64_t popcount(const std::uint64_t* words, std::size_t n) {
  std::uint64_t total = 0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) total += popcount_pair(vld1q_u64(words + i));
  for (; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(words[i]));
  return total;
}

void pack_threshold(const std::uint8_t* bytes, std::size_t count, std::uint64_t* words) {
  // Keep each byte's top bit, weight it by its position within 8, then
  // horizontally add each group of eight into one output byte.
  static const std::uint8_t kWeights[16] = {1, 2, 4, 8, 16, 32, 64, 128,
                                            1, 2, 4, 8, 16, 32, 64, 128};
  const uint8x16_t weights = vld1q_u8(kWeights);
  const std::size_t full = count / 64;
  for (std::size_t w = 0; w < full; ++w) {
    std::uint64_t v = 0;
    for (std::size_t part = 0; part < 4; ++part) {
      const uint8x16_t in = vld1q_u8(bytes + w * 64 + part * 16);
      const uint8x16_t bits = vandq_u8(vreinterpretq_u8_s8(vshrq_n_s8(vreinterpretq_s8_u8(in), 7)), weights);
      const std::uint64_t lo = vaddv_u8(vget_low_u8(bits));
      const std::uint64_t hi = vaddv_u8(vget_high_u8(bits));
      v |= (lo | (hi << 8)) << (part * 16);
    }
    words[w] = v;
  }
  if (full * 64 < count) {
    std::uint64_t v = 0;
    for (std::size_t i = full * 64; i < count; ++i) {
      v |= static_cast<std::uint64_t>(bytes[i] >> 7) << (i - full * 64);
    }
    words[full] = v;
  }
}

void unpack(const std::uint64_t* words, std::size_t count, std::uint8_t* bytes) {
  static const std::uint8_t kSelect[8] = {1, 2, 4, 8, 16, 32, 64, 128};
  const uint8x8_t select = vld1_u8(kSelect);
  std::size_t i = 0;
  for (; i + 8 <= count; i += 8) {
    const auto byte = static_cast<std::uint8_t>(words[i / 64] >> (i % 64));
    vst1_u8(bytes + i, vtst_u8(vdup_n_u8(byte), select));
  }
  for (; i < count; ++i) bytes[i] = ((words[i / 64] >> (i % 64)) & 1u) ? 255 : 0;
}

constexpr Kernels kNeon{"neon", or_words, or_shifted, confusion, popcount, pack_threshold, unpack};

}  // namespace

const Kernels& neon_kernels_unchecked() noexcept { return kNeon; }

}  // namespace stemtrace::simd
