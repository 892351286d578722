#ifndef FASELECT_SIMD_KERNELS_HPP
#define FASELECT_SIMD_KERNELS_HPP

#include <cstddef>

// Double-precision vector kernels used by the dense linear algebra layer.
// A scalar reference implementation always exists; wider variants (AVX2 on
// x86-64, NEON on aarch64) are compiled into separate translation units and
// selected once at runtime from CPU capabilities. All variants of a kernel
// compute the same quantity; summation order may differ between variants,
// so results agree to rounding, not bitwise. Within one process the active
// variant is fixed, which keeps every higher-level computation repeatable.

namespace faselect::simd {

struct Kernels {
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i x[i]^2
  double (*sumsq)(const double* x, std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*sumsq_diff)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // x[i] *= a
  void (*scale)(double* x, double a, std::size_t n);
  const char* name;
};

// Always available.
const Kernels& scalar_kernels();

// Null when the variant was not built or the CPU lacks the instructions.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

// The variant in use. Chosen once on first call: widest supported variant,
// overridable with FASELECT_KERNELS=scalar|avx2|neon in the environment.
const Kernels& active();

// Test hook: force a backend by name ("" restores automatic choice).
// Returns false if the requested backend is unavailable.
bool force_backend(const char* name);

inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}
inline double sumsq(const double* x, std::size_t n) {
  return active().sumsq(x, n);
}
inline double sumsq_diff(const double* x, const double* y, std::size_t n) {
  return active().sumsq_diff(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}
inline void scale(double* x, double a, std::size_t n) {
  active().scale(x, a, n);
}

}  // namespace faselect::simd

#endif
