#include <cstdlib>
#include <cstring>

#include "surgkin/kernels.hpp"

namespace surgkin {

namespace {

const Kernels& pick() {
    const char* env = std::getenv("SURGKIN_KERNELS");
    if (env && std::strcmp(env, "scalar") == 0) return scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
    if (env && std::strcmp(env, "avx2") == 0) return avx2_kernels();
    if (!env && __builtin_cpu_supports("avx2")) return avx2_kernels();
#endif
#if defined(__aarch64__)
    if (env && std::strcmp(env, "neon") == 0) return neon_kernels();
    if (!env) return neon_kernels();
#endif
    return scalar_kernels();
}

}  // namespace

const Kernels& kernels() {
    static const Kernels& k = pick();
    return k;
}

}  // namespace surgkin
