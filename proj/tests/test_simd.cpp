#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "cliniq/rng.hpp"
#include "cliniq/simd.hpp"

using namespace cliniq;

namespace {

std::vector<float> random_unit(SplitMix64& rng, size_t n) {
  std::vector<float> v(n);
  double norm = 0.0;
  for (float& x : v) {
    x = static_cast<float>(rng.unit() * 2.0 - 1.0);
    norm += static_cast<double>(x) * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (float& x : v) x = static_cast<float>(x / norm);
  }
  return v;
}

}  // namespace

TEST_CASE("scalar kernel on known values") {
  std::vector<float> a = {1, 2, 3};
  std::vector<float> b = {4, -5, 6};
  CHECK(simd::dot_scalar(a.data(), b.data(), 3) == 12.0);
  CHECK(simd::dot_scalar(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("force_scalar overrides dispatch") {
  simd::force_scalar(true);
  CHECK(simd::active_kernel() == simd::Kernel::scalar);
  simd::force_scalar(false);
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) {
    CHECK(simd::active_kernel() == simd::Kernel::avx2);
  }
#endif
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 and scalar agree within 1e-12 on unit vectors") {
  if (!__builtin_cpu_supports("avx2")) return;
  SplitMix64 rng(99);
  for (size_t n : {1u, 2u, 7u, 8u, 9u, 15u, 16u, 17u, 64u, 384u, 1000u}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto a = random_unit(rng, n);
      auto b = random_unit(rng, n);
      double s = simd::dot_scalar(a.data(), b.data(), n);
      double v = simd::dot_avx2(a.data(), b.data(), n);
      CAPTURE(n);
      CHECK(std::abs(s - v) <= 1e-12);
    }
  }
}

TEST_CASE("dispatched dot matches forced-scalar dot") {
  SplitMix64 rng(123);
  auto a = random_unit(rng, 384);
  auto b = random_unit(rng, 384);
  double dispatched = simd::dot(a, b);
  simd::force_scalar(true);
  double scalar = simd::dot(a, b);
  simd::force_scalar(false);
  CHECK(std::abs(dispatched - scalar) <= 1e-12);
}
#endif

TEST_CASE("one-hot dots are exact") {
  std::vector<float> e3(16, 0.0f), e5(16, 0.0f);
  e3[3] = 1.0f;
  e5[5] = 1.0f;
  CHECK(simd::dot(e3, e3) == 1.0);
  CHECK(simd::dot(e3, e5) == 0.0);
  e5[5] = -1.0f;
  std::vector<float> m3(16, 0.0f);
  m3[3] = -1.0f;
  CHECK(simd::dot(e3, m3) == -1.0);
}
