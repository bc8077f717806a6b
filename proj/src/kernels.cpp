// Copyright 2026 The QLSC Authors
// SPDX-License-Identifier: Apache-2.0

#include "qlsc/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"

namespace qlsc::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] + y[i];
}

void mul_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

void mul_acc_scalar(const double* x, const double* w, double* y,
                    std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i] * w[i];
}

void scale_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

constexpr KernelTable kScalarTable{dot_scalar,     axpy_scalar,  add_scalar,
                                   mul_scalar,     mul_acc_scalar,
                                   scale_scalar,   sum_scalar};

bool cpu_has(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(__x86_64__) || defined(__i386__)
      return detail::avx2_table() != nullptr &&
             __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::kNeon:
      return detail::neon_table() != nullptr;
  }
  return false;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect_backend()};
  return backend;
}

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

const KernelTable* table_for(Backend backend) {
  if (!cpu_has(backend)) return nullptr;
  switch (backend) {
    case Backend::kScalar:
      return &kScalarTable;
    case Backend::kAvx2:
      return detail::avx2_table();
    case Backend::kNeon:
      return detail::neon_table();
  }
  return nullptr;
}

Backend detect_backend() {
  if (const char* env = std::getenv("QLSC_KERNELS")) {
    const std::string requested(env);
    if (requested == "scalar") return Backend::kScalar;
    if (requested == "avx2" && cpu_has(Backend::kAvx2)) return Backend::kAvx2;
    if (requested == "neon" && cpu_has(Backend::kNeon)) return Backend::kNeon;
  }
  if (cpu_has(Backend::kAvx2)) return Backend::kAvx2;
  if (cpu_has(Backend::kNeon)) return Backend::kNeon;
  return Backend::kScalar;
}

const KernelTable& active() {
  return *table_for(current().load(std::memory_order_relaxed));
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

bool set_backend(Backend backend) {
  if (!cpu_has(backend)) return false;
  current().store(backend, std::memory_order_relaxed);
  return true;
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t p,
             std::size_t q, std::size_t r) {
  const auto& k = active();
  for (std::size_t i = 0; i < p; ++i) {
    double* c_row = c + i * r;
    for (std::size_t j = 0; j < q; ++j) {
      const double aij = a[i * q + j];
      if (aij != 0.0) k.axpy(aij, b + j * r, c_row, r);
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t p,
             std::size_t q, std::size_t r) {
  const auto& k = active();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      c[i * q + j] += k.dot(a + i * r, b + j * r, r);
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t p,
             std::size_t q, std::size_t r) {
  const auto& k = active();
  for (std::size_t i = 0; i < p; ++i) {
    const double* a_row = a + i * q;
    const double* b_row = b + i * r;
    for (std::size_t j = 0; j < q; ++j) {
      if (a_row[j] != 0.0) k.axpy(a_row[j], b_row, c + j * r, r);
    }
  }
}

}  // namespace qlsc::kernels
