// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense double-precision inner loops. Every kernel has a scalar reference
// implementation; vectorized variants (AVX2+FMA on x86-64, NEON on AArch64)
// are selected once at startup from the CPU feature set. Variants may differ
// from the reference only in floating-point summation order.

#pragma once

#include <cstddef>
#include <string_view>

namespace qlsc::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // z[i] = x[i] + y[i]
  void (*add)(const double* x, const double* y, double* z, std::size_t n);
  // z[i] = x[i] * y[i]
  void (*mul)(const double* x, const double* y, double* z, std::size_t n);
  // y[i] += x[i] * w[i]
  void (*mul_acc)(const double* x, const double* w, double* y, std::size_t n);
  // y[i] = alpha * x[i]
  void (*scale)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
};

/// Reference kernels; always available.
const KernelTable& scalar_table();

/// The table for `backend`, or nullptr when this build/CPU lacks it.
const KernelTable* table_for(Backend backend);

/// Best backend the running CPU supports. The QLSC_KERNELS environment
/// variable ("scalar", "avx2", "neon") overrides detection when set to a
/// supported value.
Backend detect_backend();

/// Kernels used by the tensor library.
const KernelTable& active();
Backend active_backend();

/// Switches the process-wide backend. Returns false (and changes nothing) if
/// the backend is unavailable. Not thread-safe with concurrent kernel use.
bool set_backend(Backend backend);

std::string_view backend_name(Backend backend);

// C[p x r] += A[p x q] * B[q x r], all row-major and contiguous.
void gemm_nn(const double* a, const double* b, double* c, std::size_t p,
             std::size_t q, std::size_t r);
// C[p x q] += A[p x r] * B[q x r]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t p,
             std::size_t q, std::size_t r);
// C[q x r] += A[p x q]^T * B[p x r]
void gemm_tn(const double* a, const double* b, double* c, std::size_t p,
             std::size_t q, std::size_t r);

}  // namespace qlsc::kernels
