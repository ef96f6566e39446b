#include <cstdlib>
#include <string_view>

#include "stemtrace/simd/kernels.hpp"

namespace stemtrace::simd {

#if defined(STEMTRACE_HAVE_AVX2)
const Kernels& avx2_kernels_unchecked() noexcept;
#endif
#if defined(STEMTRACE_HAVE_NEON)
const Kernels& neon_kernels_unchecked() noexcept;
#endif

const Kernels* avx2_kernels() noexcept {
#if defined(STEMTRACE_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernels_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels* neon_kernels() noexcept {
#if defined(STEMTRACE_HAVE_NEON)
  return &neon_kernels_unchecked();
#else
  return nullptr;
#endif
}

namespace {

const Kernels& select_kernels() noexcept {
  const char* pinned = std::getenv("STEMTRACE_SIMD");
  const std::string_view request = pinned != nullptr ? pinned : "";
  if (request == "scalar") return scalar_kernels();
  if (request == "avx2") return avx2_kernels() != nullptr ? *avx2_kernels() : scalar_kernels();
  if (request == "neon") return neon_kernels() != nullptr ? *neon_kernels() : scalar_kernels();
  if (const Kernels* k = avx2_kernels()) return *k;
  if (const Kernels* k = neon_kernels()) return *k;
  return scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() noexcept {
  static const Kernels& chosen = select_kernels();
  return chosen;
}

}  // namespace stemtrace::simd
