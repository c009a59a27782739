#pragma once

#include <cstddef>
#include <span>

namespace cliniq::simd {

// Dot product of two equal-length float vectors, accumulated in double.
// Products of floats are exact in double, so the scalar and SIMD variants
// differ only in summation order; on unit-norm inputs that difference stays
// within ~1e-15 and the equivalence tests pin it at 1e-12.
double dot(std::span<const float> a, std::span<const float> b);

double dot_scalar(const float* a, const float* b, size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const float* a, const float* b, size_t n);
#endif

enum class Kernel { scalar, avx2 };

// Kernel picked for this process (CPU feature probe, done once).
Kernel active_kernel();

// Test hook: true forces the scalar path regardless of CPU support.
void force_scalar(bool on);

}  // namespace cliniq::simd
