// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include <bit>

#include "stemtrace/simd/kernels.hpp"

namespace stemtrace::simd {

namespace {

inline __m256i load(const std::uint64_t* p) {
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p));
}

inline void store(std::uint64_t* p, __m256i v) {
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(p), v);
}

// Per-64-bit-lane byte popcount summed into four u64 lanes (nibble lookup).
inline __m256i popcount_lanes(__m256i v) {
  const __m256i lookup = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                          0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  const __m256i counts =
      _mm256_add_epi8(_mm256_shuffle_epi8(lookup, lo), _mm256_shuffle_epi8(lookup, hi));
  return _mm256_sad_epu8(counts, _mm256_setzero_si256());
}

inline std::uint64_t horizontal_sum(__m256i v) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

void or_words(std::uint64_t* dst, const std::uint64_t* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) store(dst + i, _mm256_or_si256(load(dst + i), load(src + i)));
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

  // Vector body needs src[i-q-1 .. i-q+3] in range.
  std::ptrdiff_t begin = q + 1 > 0 ? q + 1 : 0;
  std::ptrdiff_t end = words + q - 3 < words ? words + q - 3 : words;
  if (begin > words) begin = words;
  if (end < begin) end = begin;

  for (std::ptrdiff_t i = 0; i < begin; ++i) scalar_word(i);

  // A count of 64 in the right shift yields zero, covering b == 0.
  const __m128i left = _mm_cvtsi32_si128(static_cast<int>(b));
  const __m128i right = _mm_cvtsi32_si128(static_cast<int>(64 - b));
  std::ptrdiff_t i = begin;
  for (; i + 4 <= end; i += 4) {
    const __m256i lo = _mm256_sll_epi64(load(src + (i - q)), left);
    const __m256i hi = _mm256_srl_epi64(load(src + (i - q - 1)), right);
    store(dst + i, _mm256_or_si256(load(dst + i), _mm256_or_si256(lo, hi)));
  }
  for (; i < words; ++i) scalar_word(i);
}

PopCounts confusion(const std::uint64_t* pred, const std::uint64_t* gt, std::size_t n) {
  __m256i both = _mm256_setzero_si256();
  __m256i only_pred = _mm256_setzero_si256();
  __m256i only_gt = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256i p = load(pred + i);
    const __m256i g = load(gt + i);
    both = _mm256_add_epi64(both, popcount_lanes(_mm256_and_si256(p, g)));
    only_pred = _mm256_add_epi64(only_pred, popcount_lanes(_mm256_andnot_si256(g, p)));
    only_gt = _mm256_add_epi64(only_gt, popcount_lanes(_mm256_andnot_si256(p, g)));
  }
  PopCounts c{horizontal_sum(both), horizontal_sum(only_pred), horizontal_sum(only_gt)};
  for (; i < n; ++i) {
    c.both += static_cast<std::uint64_t>(std::popcount(pred[i] & gt[i]));
    c.only_pred += static_cast<std::uint64_t>(std::popcount(pred[i] & ~gt[i]));
    c.only_gt += static_cast<std::uint64_t>(std::popcount(~pred[i] & gt[i]));
  }
  return c;
}

std::uint64_t popcount(const std::uint64_t* words, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_epi64(acc, popcount_lanes(load(words + i)));
  std::uint64_t total = horizontal_sum(acc);
  for (; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(words[i]));
  return total;
}

void pack_threshold(const std::uint8_t* bytes, std::size_t count, std::uint64_t* words) {
  const std::size_t full = count / 64;
  for (std::size_t w = 0; w < full; ++w) {
    const auto* p = reinterpret_cast<const __m256i*>(bytes + w * 64);
    // movemask takes each byte's top bit, which is exactly "value >= 128".
    const auto lo = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_loadu_si256(p)));
    const auto hi = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_loadu_si256(p + 1)));
    words[w] = static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
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
  const __m256i spread = _mm256_setr_epi8(0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1,
                                          2, 2, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3);
  const __m256i select = _mm256_set1_epi64x(static_cast<long long>(0x8040201008040201ULL));
  std::size_t i = 0;
  for (; i + 32 <= count; i += 32) {
    const auto chunk = static_cast<std::uint32_t>(words[i / 64] >> (i % 64));
    const __m256i v = _mm256_shuffle_epi8(_mm256_set1_epi32(static_cast<int>(chunk)), spread);
    const __m256i hit = _mm256_cmpeq_epi8(_mm256_and_si256(v, select), select);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(bytes + i), hit);
  }
  for (; i < count; ++i) bytes[i] = ((words[i / 64] >> (i % 64)) & 1u) ? 255 : 0;
}

constexpr Kernels kAvx2{"avx2", or_words, or_shifted, confusion, popcount, pack_threshold, unpack};

}  // namespace

const Kernels& avx2_kernels_unchecked() noexcept { return kAvx2; }

}  // namespace stemtrace::simd
