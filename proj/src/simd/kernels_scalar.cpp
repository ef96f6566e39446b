#include <bit>

#include "stemtrace/simd/kernels.hpp"

namespace stemtrace::simd {

namespace {

void or_words(std::uint64_t* dst, const std::uint64_t* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] |= src[i];
}

std::ptrdiff_t floor_div64(std::ptrdiff_t v) { return v >= 0 ? v / 64 : -((-v + 63) / 64); }

void or_shifted(std::uint64_t* dst, const std::uint64_t* src, std::size_t n, std::ptrdiff_t shift) {
  const auto words = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t q = floor_div64(shift);
  const unsigned b = static_cast<unsigned>(shift - q * 64);
  for (std::ptrdiff_t i = 0; i < words; ++i) {
    const std::ptrdiff_t lo = i - q;      // contributes its low bits, moved up by b
    const std::ptrdiff_t carry = lo - 1;  // contributes its high bits
    std::uint64_t v = 0;
    if (lo >= 0 && lo < words) v |= src[lo] << b;
    if (b != 0 && carry >= 0 && carry < words) v |= src[carry] >> (64 - b);
    dst[i] |= v;
  }
}

PopCounts confusion(const std::uint64_t* pred, const std::uint64_t* gt, std::size_t n) {
  PopCounts c;
  for (std::size_t i = 0; i < n; ++i) {
    c.both += static_cast<std::uint64_t>(std::popcount(pred[i] & gt[i]));
    c.only_pred += static_cast<std::uint64_t>(std::popcount(pred[i] & ~gt[i]));
    c.only_gt += static_cast<std::uint64_t>(std::popcount(~pred[i] & gt[i]));
  }
  return c;
}

std::uint64_t popcount(const std::uint64_t* words, std::size_t n) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < n; ++i) total += static_cast<std::uint64_t>(std::popcount(words[i]));
  return total;
}

void pack_threshold(const std::uint8_t* bytes, std::size_t count, std::uint64_t* words) {
  const std::size_t nwords = (count + 63) / 64;
  for (std::size_t w = 0; w < nwords; ++w) {
    std::uint64_t v = 0;
    const std::size_t base = w * 64;
    const std::size_t end = base + 64 < count ? base + 64 : count;
    for (std::size_t i = base; i < end; ++i) {
      v |= static_cast<std::uint64_t>(bytes[i] >> 7) << (i - base);
    }
    words[w] = v;
  }
}

void unpack(const std::uint64_t* words, std::size_t count, std::uint8_t* bytes) {
  for (std::size_t i = 0; i < count; ++i) {
    bytes[i] = ((words[i / 64] >> (i % 64)) & 1u) ? 255 : 0;
  }
}

constexpr Kernels kScalar{"scalar", or_words, or_shifted, confusion, popcount, pack_threshold, unpack};

}  // namespace

const Kernels& scalar_kernels() noexcept { return kScalar; }

}  // namespace stemtrace::simd
