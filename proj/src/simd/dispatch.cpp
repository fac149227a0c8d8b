// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string>

#include "asap/simd.hpp"
#include "kernels_impl.hpp"

namespace asap::simd {

namespace {

constexpr KernelTable kScalar{Backend::scalar,          detail::dot_scalar, detail::axpy_scalar,
                              detail::scale_scalar,     detail::sum_scalar, detail::max_scalar};

#if ASAP_SIMD_X86
constexpr KernelTable kAvx2{Backend::avx2,        detail::dot_avx2, detail::axpy_avx2,
                            detail::scale_avx2,   detail::sum_avx2, detail::max_avx2};

bool cpu_has_avx2() noexcept {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if ASAP_SIMD_NEON
constexpr KernelTable kNeon{Backend::neon,        detail::dot_neon, detail::axpy_neon,
                            detail::scale_neon,   detail::sum_neon, detail::max_neon};
#endif

const KernelTable& select() noexcept {
    if (const char* env = std::getenv("ASAP_SIMD"); env && std::string(env) == "scalar") {
        return kScalar;
    }
#if ASAP_SIMD_X86
    if (cpu_has_avx2()) {
        return kAvx2;
    }
#endif
#if ASAP_SIMD_NEON
    return kNeon;
#else
    return kScalar;
#endif
}

}  // namespace

std::string_view to_string(Backend b) noexcept {
    switch (b) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
        case Backend::neon:
            return "neon";
    }
    return "unknown";
}

const KernelTable& scalar_kernels() noexcept { return kScalar; }

const KernelTable* kernels_for(Backend b) noexcept {
    switch (b) {
        case Backend::scalar:
            return &kScalar;
        case Backend::avx2:
#if ASAP_SIMD_X86
            return cpu_has_avx2() ? &kAvx2 : nullptr;
#else
            return nullptr;
#endif
        case Backend::neon:
#if ASAP_SIMD_NEON
            return &kNeon;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

std::vector<Backend> available_backends() {
    std::vector<Backend> out;
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
        if (kernels_for(b) != nullptr) {
            out.push_back(b);
        }
    }
    return out;
}

const KernelTable& active() noexcept {
    static const KernelTable& table = select();
    return table;
}

}  // namespace asap::simd
