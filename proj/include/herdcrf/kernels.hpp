#pragma once

#include <cstddef>

// Vector kernels behind the numeric inner loops: dense dot products, the
// herding parameter update (axpy), weighted squared distances, and the
// max/argmax reductions used by message passing and decoding.
//
// Two backends ship: a scalar reference and an AVX2 variant. The active
// backend is picked once at startup (cpuid; HERDCRF_KERNELS=scalar|avx2|auto
// overrides). Elementwise kernels (axpy, add, mix, scale, add_scalar) are
// bit-identical across backends; reduction kernels may differ in the last
// ulps because lane sums reassociate.
//
// argmax breaks ties toward the lowest index in every backend.

namespace herdcrf::kern {

struct KernelTable {
    const char* name;

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sqdist)(const double* a, const double* b, std::size_t n);
    double (*sqnorm)(const double* a, std::size_t n);

    void (*axpy)(double* y, const double* x, double alpha, std::size_t n);  // y += alpha*x
    void (*add)(double* y, const double* x, std::size_t n);                 // y += x
    void (*scale)(double* y, double alpha, std::size_t n);                  // y *= alpha
    void (*add_scalar)(double* y, double c, std::size_t n);                 // y += c
    // y = w*a + (1-w)*b
    void (*mix)(double* y, const double* a, const double* b, double w, std::size_t n);

    double (*max_value)(const double* a, std::size_t n);        // n >= 1
    std::size_t (*argmax)(const double* a, std::size_t n);      // n >= 1, lowest-index tie
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_table();

// The dispatched table. Resolved once; stable for the process lifetime.
const KernelTable& active();

}  // namespace herdcrf::kern
