#include <cstdlib>
#include <string_view>

#include "dstyle/simd/kernels.hpp"

namespace dstyle::simd {

#if defined(DSTYLE_BUILD_AVX2)
const KernelTable& avx2_kernel_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(DSTYLE_BUILD_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2_kernel_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* env = std::getenv("DSTYLE_SIMD");
        if (env && std::string_view(env) == "scalar") return scalar_kernels();
        if (const auto* t = avx2_kernels()) return *t;
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace dstyle::simd
