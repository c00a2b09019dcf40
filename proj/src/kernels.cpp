#include <atomic>
#include <cstdlib>
#include <cstring>

#include "unitok/kernels.h"

namespace unitok::kern {
namespace {

const Ops* detect() {
    const char* env = std::getenv("UNITOK_KERNELS");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (env && std::strcmp(env, "avx2") == 0) {
        const Ops* a = avx2_ops();
        return a ? a : &scalar_ops();
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        const Ops* a = avx2_ops();
        if (a) return a;
    }
#endif
    return &scalar_ops();
}

std::atomic<const Ops*> g_active{nullptr};

}  // namespace

const Ops& ops() {
    const Ops* p = g_active.load(std::memory_order_acquire);
    if (!p) {
        p = detect();
        g_active.store(p, std::memory_order_release);
    }
    return *p;
}

bool force_lane(const char* name) {
    if (std::strcmp(name, "scalar") == 0) {
        g_active.store(&scalar_ops(), std::memory_order_release);
        return true;
    }
    if (std::strcmp(name, "avx2") == 0) {
        const Ops* a = avx2_ops();
        if (!a) return false;
#if defined(__x86_64__) || defined(_M_X64)
        if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))) return false;
#endif
        g_active.store(a, std::memory_order_release);
        return true;
    }
    return false;
}

}  // namespace unitok::kern
