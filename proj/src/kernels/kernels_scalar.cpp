#include <cmath>
#include <cstddef>

#include "fde/kernels.hpp"

// Reference kernels. Plain loops, no intrinsics; this translation unit is the
// semantic baseline the vector variants are tested against.

namespace fde::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void relu_scalar(double* out, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = src[i] > 0.0 ? src[i] : 0.0;
}

void relu_backward_scalar(double* d_pre, const double* pre, const double* d_post, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) d_pre[i] = pre[i] > 0.0 ? d_post[i] : 0.0;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double sum_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i]);
    return acc;
}

void adam_update_scalar(double* p, double* m, double* v, const double* g, std::size_t n,
                        double lr, double beta1, double beta2, double eps, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        double m_hat = m[i] / bc1;
        double v_hat = v[i] / bc2;
        p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

}  // namespace

namespace detail {

const Table& scalar_table() {
    static const Table t = {
        dot_scalar,     axpy_scalar,        relu_scalar,       relu_backward_scalar,
        sum_sq_diff_scalar, sum_abs_diff_scalar, adam_update_scalar,
    };
    return t;
}

}  // namespace detail
}  // namespace fde::kernels
