// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#if defined(__x86_64__) || defined(_M_X64)
#define ASAP_SIMD_X86 1
#else
#define ASAP_SIMD_X86 0
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
#define ASAP_SIMD_NEON 1
#else
#define ASAP_SIMD_NEON 0
#endif

namespace asap::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void scale_scalar(double alpha, double* x, std::size_t n);
double sum_scalar(const double* x, std::size_t n);
double max_scalar(const double* x, std::size_t n);

#if ASAP_SIMD_X86
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scale_avx2(double alpha, double* x, std::size_t n);
double sum_avx2(const double* x, std::size_t n);
double max_avx2(const double* x, std::size_t n);
#endif

#if ASAP_SIMD_NEON
double dot_neon(const double* a, const double* b, std::size_t n);
void axpy_neon(double alpha, const double* x, double* y, std::size_t n);
void scale_neon(double alpha, double* x, std::size_t n);
double sum_neon(const double* x, std::size_t n);
double max_neon(const double* x, std::size_t n);
#endif

}  // namespace asap::simd::detail
