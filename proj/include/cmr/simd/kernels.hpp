#pragma once

// Dense vector kernels used by the tensor ops. Every kernel has a portable
// scalar reference implementation; an AVX2+FMA variant is compiled when the
// toolchain supports it and selected at runtime when the CPU does.
//
// Set CMR_KERNELS=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

#include "cmr/nn/real.hpp"

namespace cmr::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  nn::Real (*dot)(const nn::Real* a, const nn::Real* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(nn::Real alpha, const nn::Real* x, nn::Real* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(nn::Real alpha, nn::Real* x, std::size_t n);
  // y[i] += x[i]
  void (*add)(const nn::Real* x, nn::Real* y, std::size_t n);
  // max_i x[i]; n >= 1
  nn::Real (*max)(const nn::Real* x, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_kernels();

bool cpu_supports(Isa isa);

// The table in use. Resolved once on first call.
const KernelTable& active();

// Overrides the active table (tests and benchmarks). Throws if the ISA is
// unavailable on this build or CPU.
void set_active(Isa isa);

inline nn::Real dot(std::span<const nn::Real> a, std::span<const nn::Real> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(nn::Real alpha, std::span<const nn::Real> x, std::span<nn::Real> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

// C[m x n] += A[m x k] * B[k x n], all row-major.
void gemm_nn(const nn::Real* a, const nn::Real* b, nn::Real* c, std::size_t m, std::size_t k,
             std::size_t n);

// C[m x k] += A[m x n] * B[k x n]^T
void gemm_nt(const nn::Real* a, const nn::Real* b, nn::Real* c, std::size_t m, std::size_t n,
             std::size_t k);

// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn(const nn::Real* a, const nn::Real* b, nn::Real* c, std::size_t m, std::size_t k,
             std::size_t n);

}  // namespace cmr::simd
