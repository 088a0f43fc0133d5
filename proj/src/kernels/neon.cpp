#include <arm_neon.h>

#include <cstddef>

namespace msk::kernels::neon_impl {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double res = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) res += a[i] * b[i];
    return res;
}

double wdot(const double* w, const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), vld1q_f64(a + i)), vld1q_f64(b + i));
    double res = vaddvq_f64(acc);
    for (; i < n; ++i) res += w[i] * a[i] * b[i];
    return res;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void waxpy(double alpha, const double* w, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t wx = vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i));
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, wx));
    }
    for (; i < n; ++i) y[i] += alpha * w[i] * x[i];
}

double sum(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
    double res = vaddvq_f64(acc);
    for (; i < n; ++i) res += a[i];
    return res;
}

}  // namespace msk::kernels::neon_impl
