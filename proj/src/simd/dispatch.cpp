// Runtime kernel selection. No intrinsics in this file.

#include "gdl/simd.hpp"

#include <cstdlib>
#include <string>

namespace gdl::simd {

#ifndef GDL_HAVE_AVX2_KERNELS
const KernelTable *avx2_kernels() { return nullptr; }
#endif

bool cpu_supports_avx2() {
#if defined(GDL_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

namespace {

const KernelTable *best_available() {
    if (cpu_supports_avx2() && avx2_kernels() != nullptr) {
        return avx2_kernels();
    }
    return &scalar_kernels();
}

const KernelTable *resolve(std::string_view name) {
    if (name == "scalar") {
        return &scalar_kernels();
    }
    if (name == "avx2") {
        return (cpu_supports_avx2() && avx2_kernels() != nullptr) ? avx2_kernels() : nullptr;
    }
    if (name == "auto" || name.empty()) {
        return best_available();
    }
    return nullptr;
}

const KernelTable *&active_slot() {
    static const KernelTable *slot = [] {
        const char *env = std::getenv("GDL_KERNELS");
        const KernelTable *t = env != nullptr ? resolve(env) : nullptr;
        return t != nullptr ? t : best_available();
    }();
    return slot;
}

} // namespace

const KernelTable &active() { return *active_slot(); }

bool select(std::string_view name) {
    const KernelTable *t = resolve(name);
    if (t == nullptr) {
        return false;
    }
    active_slot() = t;
    return true;
}

} // namespace gdl::simd
