#include "herdcrf/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace herdcrf::kern {

#if HERDCRF_AVX2_COMPILED
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if HERDCRF_AVX2_COMPILED
#if defined(__GNUC__) || defined(__clang__)
    if (!__builtin_cpu_supports("avx2")) return nullptr;
#endif
    return avx2_table_impl();
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& resolve() {
    const char* pref = std::getenv("HERDCRF_KERNELS");
    if (pref != nullptr) {
        if (std::strcmp(pref, "scalar") == 0) return scalar_table();
        if (std::strcmp(pref, "avx2") == 0) {
            const KernelTable* t = avx2_table();
            if (t != nullptr) return *t;
            return scalar_table();  // requested backend unavailable
        }
        // anything else (incl. "auto") falls through to detection
    }
    const KernelTable* t = avx2_table();
    return t != nullptr ? *t : scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable& table = resolve();
    return table;
}

}  // namespace herdcrf::kern
