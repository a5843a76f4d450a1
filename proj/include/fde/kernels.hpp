#pragma once

#include <cstddef>

namespace fde::kernels {

// Data-parallel inner loops behind the numeric modules. Every entry point has
// a scalar reference implementation and, on x86-64 with AVX2+FMA, a vector
// variant. The backend is picked once at startup (env FDE_KERNELS=scalar|avx2
// overrides autodetection) and can be forced programmatically, which is how
// the equivalence tests drive both paths.
enum class Backend { scalar = 0, avx2 = 1 };

const char* backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
void set_backend(Backend b);  // throws ConfigError if unavailable

struct Table {
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double* y, double a, const double* x, std::size_t n);
    // out[i] = max(src[i], 0)
    void (*relu)(double* out, const double* src, std::size_t n);
    // d_pre[i] = pre[i] > 0 ? d_post[i] : 0
    void (*relu_backward)(double* d_pre, const double* pre, const double* d_post, std::size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
    // In-place Adam update over one flat parameter array. bc1/bc2 are the
    // bias-correction factors 1 - beta^t for the current step.
    void (*adam_update)(double* p, double* m, double* v, const double* g, std::size_t n,
                        double lr, double beta1, double beta2, double eps, double bc1, double bc2);
};

const Table& table();

inline double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
inline void axpy(double* y, double a, const double* x, std::size_t n) { table().axpy(y, a, x, n); }
inline void relu(double* out, const double* src, std::size_t n) { table().relu(out, src, n); }
inline void relu_backward(double* d_pre, const double* pre, const double* d_post, std::size_t n) {
    table().relu_backward(d_pre, pre, d_post, n);
}
inline double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    return table().sum_sq_diff(a, b, n);
}
inline double sum_abs_diff(const double* a, const double* b, std::size_t n) {
    return table().sum_abs_diff(a, b, n);
}
inline void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                        double lr, double beta1, double beta2, double eps, double bc1, double bc2) {
    table().adam_update(p, m, v, g, n, lr, beta1, beta2, eps, bc1, bc2);
}

namespace detail {
const Table& scalar_table();
#if defined(FDE_HAVE_AVX2)
const Table& avx2_table();
#endif
}  // namespace detail

}  // namespace fde::kernels
