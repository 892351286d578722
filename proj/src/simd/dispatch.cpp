#include "faselect/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace faselect::simd {

#if defined(FASELECT_BUILD_AVX2)
const Kernels* avx2_kernels_impl();
#endif
#if defined(FASELECT_BUILD_NEON)
const Kernels* neon_kernels_impl();
#endif

const Kernels* avx2_kernels() {
#if defined(FASELECT_BUILD_AVX2)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return avx2_kernels_impl();
  }
#endif
  return nullptr;
}

const Kernels* neon_kernels() {
#if defined(FASELECT_BUILD_NEON)
  return neon_kernels_impl();
#else
  return nullptr;
#endif
}

namespace {

const Kernels* pick(const char* name) {
  if (name == nullptr || *name == '\0') {
    if (const Kernels* k = avx2_kernels()) return k;
    if (const Kernels* k = neon_kernels()) return k;
    return &scalar_kernels();
  }
  if (std::strcmp(name, "scalar") == 0) return &scalar_kernels();
  if (std::strcmp(name, "avx2") == 0) return avx2_kernels();
  if (std::strcmp(name, "neon") == 0) return neon_kernels();
  return nullptr;
}

std::atomic<const Kernels*> g_active{nullptr};

}  // namespace

const Kernels& active() {
  const Kernels* k = g_active.load(std::memory_order_acquire);
  if (k == nullptr) {
    const Kernels* chosen = pick(std::getenv("FASELECT_KERNELS"));
    if (chosen == nullptr) chosen = &scalar_kernels();
    const Kernels* expected = nullptr;
    if (!g_active.compare_exchange_strong(expected, chosen,
                                          std::memory_order_acq_rel)) {
      chosen = expected;
    }
    k = chosen;
  }
  return *k;
}

bool force_backend(const char* name) {
  const Kernels* k = pick(name);
  if (k == nullptr) return false;
  g_active.store(k, std::memory_order_release);
  return true;
}

}  // namespace faselect::simd
