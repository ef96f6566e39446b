#include "stemtrace/mask.hpp"

#include <algorithm>
#include <string>

#include "stemtrace/error.hpp"
#include "stemtrace/simd/kernels.hpp"

namespace stemtrace {

const simd::Kernels& ExecPolicy::resolved_kernels() const noexcept {
  return kernels != nullptr ? *kernels : simd::active_kernels();
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : width_(width), height_(height), stride_((width + 63) / 64) {
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::domain, "mask dimensions must be at least 1x1, got " +
                                       std::to_string(width) + "x" + std::to_string(height));
  }
  words_.assign(stride_ * height_, 0);
}

std::uint64_t BinaryMask::tail_mask() const noexcept {
  const std::size_t used = width_ % 64;
  return used == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << used) - 1;
}

void BinaryMask::clear_padding() noexcept {
  const std::uint64_t keep = tail_mask();
  for (std::size_t y = 0; y < height_; ++y) words_[y * stride_ + stride_ - 1] &= keep;
}

std::uint64_t BinaryMask::count(const ExecPolicy& policy) const {
  return policy.resolved_kernels().popcount(words_.data(), words_.size());
}

bool BinaryMask::any() const noexcept {
  return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& other) {
  if (other.width_ != width_ || other.height_ != height_) {
    throw Error(ErrorCode::dimension_mismatch,
                "cannot merge masks of " + std::to_string(width_) + "x" + std::to_string(height_) +
                    " and " + std::to_string(other.width_) + "x" + std::to_string(other.height_));
  }
  simd::active_kernels().or_words(words_.data(), other.words_.data(), words_.size());
  return *this;
}

}  // namespace stemtrace
