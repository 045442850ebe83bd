#include "herdcrf/kernels.hpp"

namespace herdcrf::kern {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sqnorm_scalar(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

void axpy_scalar(double* y, const double* x, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scalar_vec(double* y, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void scale_scalar(double* y, double alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= alpha;
}

void add_const_scalar(double* y, double c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += c;
}

void mix_scalar(double* y, const double* a, const double* b, double w, std::size_t n) {
    double v = 1.0 - w;
    for (std::size_t i = 0; i < n; ++i) y[i] = w * a[i] + v * b[i];
}

double max_value_scalar(const double* a, std::size_t n) {
    double m = a[0];
    for (std::size_t i = 1; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

std::size_t argmax_scalar(const double* a, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (a[i] > a[best]) best = i;
    return best;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        if (d < 0) d = -d;
        if (d > m) m = d;
    }
    return m;
}

constexpr KernelTable kScalar = {
    "scalar",        dot_scalar,        sqdist_scalar, sqnorm_scalar,
    axpy_scalar,     add_scalar_vec,    scale_scalar,  add_const_scalar,
    mix_scalar,      max_value_scalar,  argmax_scalar, max_abs_diff_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace herdcrf::kern
