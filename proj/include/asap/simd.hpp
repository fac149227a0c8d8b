// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Inner-loop kernels with a scalar reference implementation and vectorized
// variants. The variant is chosen once at startup from the CPU's feature set;
// setting ASAP_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <string_view>
#include <vector>

namespace asap::simd {

enum class Backend { scalar, avx2, neon };

std::string_view to_string(Backend b) noexcept;

struct KernelTable {
    Backend backend;
    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// x[i] *= alpha
    void (*scale)(double alpha, double* x, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    /// Largest element; n must be >= 1.
    double (*max)(const double* x, std::size_t n);
};

/// The reference implementation. Always available.
const KernelTable& scalar_kernels() noexcept;

/// Table for `b`, or nullptr when this build or CPU cannot run it.
const KernelTable* kernels_for(Backend b) noexcept;

/// Every backend usable on this machine, scalar first.
std::vector<Backend> available_backends();

/// The table selected for this process.
const KernelTable& active() noexcept;

}  // namespace asap::simd
