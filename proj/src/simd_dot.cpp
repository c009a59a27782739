#include "cliniq/simd.hpp"

#include <atomic>
#include <cassert>

namespace cliniq::simd {

double dot_scalar(const float* a, const float* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

namespace {

std::atomic<bool> g_force_scalar{false};

Kernel probe() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) return Kernel::avx2;
#endif
  return Kernel::scalar;
}

Kernel probed_kernel() {
  static const Kernel k = probe();
  return k;
}

}  // namespace

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

Kernel active_kernel() {
  if (g_force_scalar.load(std::memory_order_relaxed)) return Kernel::scalar;
  return probed_kernel();
}

double dot(std::span<const float> a, std::span<const float> b) {
  assert(a.size() == b.size());
#if defined(__x86_64__) || defined(_M_X64)
  if (active_kernel() == Kernel::avx2) return dot_avx2(a.data(), b.data(), a.size());
#endif
  return dot_scalar(a.data(), b.data(), a.size());
}

}  // namespace cliniq::simd
