// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels_internal.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace qlsc::kernels::detail {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_neon(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(z + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] + y[i];
}

void mul_neon(const double* x, const double* y, double* z, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(z + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

void mul_acc_neon(const double* x, const double* w, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), vld1q_f64(x + i),
                               vld1q_f64(w + i)));
  }
  for (; i < n; ++i) y[i] += x[i] * w[i];
}

void scale_neon(double alpha, const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vmulq_n_f64(vld1q_f64(x + i), alpha));
  }
  for (; i < n; ++i) y[i] = alpha * x[i];
}

double sum_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

constexpr KernelTable kNeonTable{dot_neon,     axpy_neon,  add_neon, mul_neon,
                                 mul_acc_neon, scale_neon, sum_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace qlsc::kernels::detail

#else

namespace qlsc::kernels::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace qlsc::kernels::detail

#endif
