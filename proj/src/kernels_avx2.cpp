// AVX2 variants. Elementwise kernels mirror the scalar reference operation
// for operation (mul then add, never fused) so results match the scalar
// backend bit for bit; reductions keep four lane accumulators and may differ
// from scalar in the final ulps.

#include "herdcrf/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace herdcrf::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdist_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sqnorm_avx2(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(a + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * a[i];
    return s;
}

void axpy_avx2(double* y, const double* x, double alpha, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_avx2(double* y, const double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void scale_avx2(double* y, double alpha, std::size_t n) {
    __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
    for (; i < n; ++i) y[i] *= alpha;
}

void add_scalar_avx2(double* y, double c, std::size_t n) {
    __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), vc));
    for (; i < n; ++i) y[i] += c;
}

void mix_avx2(double* y, const double* a, const double* b, double w, std::size_t n) {
    double v = 1.0 - w;
    __m256d vw = _mm256_set1_pd(w);
    __m256d vv = _mm256_set1_pd(v);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d ta = _mm256_mul_pd(vw, _mm256_loadu_pd(a + i));
        __m256d tb = _mm256_mul_pd(vv, _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(ta, tb));
    }
    for (; i < n; ++i) y[i] = w * a[i] + v * b[i];
}

double max_value_avx2(const double* a, std::size_t n) {
    if (n < 8) {
        double m = a[0];
        for (std::size_t i = 1; i < n; ++i)
            if (a[i] > m) m = a[i];
        return m;
    }
    __m256d acc = _mm256_loadu_pd(a);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(a + i));
    double m = hmax(acc);
    for (; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

// Max reduce, then first exact match keeps the lowest-index tie rule.
std::size_t argmax_avx2(const double* a, std::size_t n) {
    double m = max_value_avx2(a, n);
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] == m) return i;
    return 0;  // unreachable for finite input
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign_mask, d));
    }
    double m = (i > 0) ? hmax(acc) : 0.0;
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        if (d < 0) d = -d;
        if (d > m) m = d;
    }
    return m;
}

constexpr KernelTable kAvx2 = {
    "avx2",        dot_avx2,        sqdist_avx2, sqnorm_avx2,
    axpy_avx2,     add_avx2,        scale_avx2,  add_scalar_avx2,
    mix_avx2,      max_value_avx2,  argmax_avx2, max_abs_diff_avx2,
};

}  // namespace

const KernelTable* avx2_table_impl() { return &kAvx2; }

}  // namespace herdcrf::kern

#else

namespace herdcrf::kern {
const KernelTable* avx2_table_impl() { return nullptr; }
}  // namespace herdcrf::kern

#endif
