#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stemtrace {

namespace simd {
struct Kernels;
}

/// Execution knobs shared by the bulk mask operations. Results never depend
/// on either setting.
struct ExecPolicy {
  unsigned threads = 1;
  /// nullptr selects simd::active_kernels().
  const simd::Kernels* kernels = nullptr;

  const simd::Kernels& resolved_kernels() const noexcept;
};

/// width x height bitmap, 1 = stem. Rows are packed into 64-bit words,
/// pixel x of a row at bit x % 64 of word x / 64. Bits past the width in the
/// last word of each row are always zero.
class BinaryMask {
 public:
  /// Throws Error(domain) unless width and height are both >= 1.
  BinaryMask(std::size_t width, std::size_t height);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t words_per_row() const noexcept { return stride_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }

  bool get(std::size_t x, std::size_t y) const noexcept {
    return (words_[y * stride_ + x / 64] >> (x % 64)) & 1u;
  }
  void set(std::size_t x, std::size_t y, bool value = true) noexcept {
    std::uint64_t& w = words_[y * stride_ + x / 64];
    const std::uint64_t bit = std::uint64_t{1} << (x % 64);
    w = value ? (w | bit) : (w & ~bit);
  }

  std::span<std::uint64_t> row(std::size_t y) noexcept {
    return {words_.data() + y * stride_, stride_};
  }
  std::span<const std::uint64_t> row(std::size_t y) const noexcept {
    return {words_.data() + y * stride_, stride_};
  }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Mask of valid bits in the last word of a row.
  std::uint64_t tail_mask() const noexcept;
  /// Re-establishes the zero-padding invariant after raw word writes.
  void clear_padding() noexcept;

  std::uint64_t count(const ExecPolicy& policy = {}) const;
  bool any() const noexcept;

  /// In-place union; throws Error(dimension_mismatch) on differing shapes.
  BinaryMask& operator|=(const BinaryMask& other);

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::size_t stride_;
  std::vector<std::uint64_t> words_;
};

}  // namespace stemtrace
