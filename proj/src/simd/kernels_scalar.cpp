#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cmr/simd/kernels.hpp"

namespace cmr::simd {

using nn::Real;

namespace {

Real dot_scalar(const Real* a, const Real* b, std::size_t n) {
  Real s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(Real alpha, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(Real alpha, Real* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add_scalar(const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

Real max_scalar(const Real* x, std::size_t n) {
  Real m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

const KernelTable kScalar{Isa::Scalar, dot_scalar, axpy_scalar, scale_scalar, add_scalar, max_scalar};

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* resolve() {
  const char* env = std::getenv("CMR_KERNELS");
  if (env != nullptr && std::string(env) == "scalar") return &kScalar;
  if (const KernelTable* t = avx2_kernels(); t != nullptr && cpu_supports(Isa::Avx2)) return t;
  return &kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_kernels() { return kScalar; }

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = resolve();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void set_active(Isa isa) {
  if (isa == Isa::Scalar) {
    g_active.store(&kScalar, std::memory_order_release);
    return;
  }
  const KernelTable* t = avx2_kernels();
  if (t == nullptr || !cpu_supports(isa)) {
    throw std::runtime_error("kernel ISA not available: " + std::string(isa_name(isa)));
  }
  g_active.store(t, std::memory_order_release);
}

void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  const KernelTable& kt = active();
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * n;
    const Real* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      if (arow[p] != Real(0)) kt.axpy(arow[p], b + p * n, crow, n);
    }
  }
}

void gemm_nt(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t n, std::size_t k) {
  const KernelTable& kt = active();
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * n;
    Real* crow = c + i * k;
    for (std::size_t p = 0; p < k; ++p) crow[p] += kt.dot(arow, b + p * n, n);
  }
}

void gemm_tn(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t n) {
  const KernelTable& kt = active();
  for (std::size_t i = 0; i < m; ++i) {
    const Real* arow = a + i * k;
    const Real* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      if (arow[p] != Real(0)) kt.axpy(arow[p], brow, c + p * n, n);
    }
  }
}

}  // namespace cmr::simd
