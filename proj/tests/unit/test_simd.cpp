#include <doctest.h>

#include <random>
#include <vector>

#include "cmr/simd/kernels.hpp"

using cmr::nn::Real;
namespace simd = cmr::simd;

namespace {

std::vector<Real> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0, 1);
  std::vector<Real> v(n);
  for (auto& x : v) x = Real(d(rng));
  return v;
}

void naive_gemm(const std::vector<Real>& a, const std::vector<Real>& b, std::vector<Real>& c, std::size_t m, std::size_t k,
                std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t t = 0; t < k; ++t) s += double(a[i * k + t]) * double(b[t * n + j]);
      c[i * n + j] += Real(s);
    }
  }
}

}  // namespace

TEST_CASE("scalar and AVX2 kernels agree") {
  const simd::KernelTable* fast = simd::avx2_kernels();
  if (fast == nullptr || !simd::cpu_supports(simd::Isa::Avx2)) {
    MESSAGE("AVX2 kernels unavailable; comparing scalar against itself");
    fast = &simd::scalar_kernels();
  }
  const auto& ref = simd::scalar_kernels();
  std::mt19937_64 rng(21);
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 63u, 64u, 129u}) {
    auto a = random_vector(n, rng), b = random_vector(n, rng);
    CHECK(fast->dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));
    CHECK(fast->max(a.data(), n) == ref.max(a.data(), n));
    auto y1 = b, y2 = b;
    fast->axpy(Real(0.7), a.data(), y1.data(), n);
    ref.axpy(Real(0.7), a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));
    y1 = b, y2 = b;
    fast->add(a.data(), y1.data(), n);
    ref.add(a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);
    y1 = a, y2 = a;
    fast->scale(Real(-1.5), y1.data(), n);
    ref.scale(Real(-1.5), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);
  }
}

TEST_CASE("gemm variants match a naive triple loop under both kernel sets") {
  std::mt19937_64 rng(5);
  std::vector<simd::Isa> isas = {simd::Isa::Scalar};
  if (simd::avx2_kernels() != nullptr && simd::cpu_supports(simd::Isa::Avx2)) isas.push_back(simd::Isa::Avx2);
  const simd::Isa original = simd::active().isa;
  for (simd::Isa isa : isas) {
    simd::set_active(isa);
    const std::size_t m = 5, k = 9, n = 6;
    auto a = random_vector(m * k, rng), b = random_vector(k * n, rng);
    std::vector<Real> c(m * n, Real(1)), want(m * n, Real(1));
    simd::gemm_nn(a.data(), b.data(), c.data(), m, k, n);
    naive_gemm(a, b, want, m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12));

    // A * B^T with B stored as {n x k}.
    std::vector<Real> bt(n * k);
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t j = 0; j < n; ++j) bt[j * k + t] = b[t * n + j];
    std::vector<Real> c2(m * n, Real(0)), want2(m * n, Real(0));
    simd::gemm_nt(a.data(), bt.data(), c2.data(), m, k, n);
    naive_gemm(a, b, want2, m, k, n);
    for (std::size_t i = 0; i < c2.size(); ++i) CHECK(c2[i] == doctest::Approx(want2[i]).epsilon(1e-12));

    // A^T * B with A stored as {k x m}.
    std::vector<Real> at(k * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t t = 0; t < k; ++t) at[t * m + i] = a[i * k + t];
    std::vector<Real> c3(m * n, Real(0));
    simd::gemm_tn(at.data(), b.data(), c3.data(), k, m, n);
    for (std::size_t i = 0; i < c3.size(); ++i) CHECK(c3[i] == doctest::Approx(want2[i]).epsilon(1e-12));
  }
  simd::set_active(original);
}
