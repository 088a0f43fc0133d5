#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Inner-loop arithmetic used by the solvers. Each backend implements the same
// table; the scalar one is the reference the vector backends are tested
// against. Vector backends reorder the summation, so results agree with the
// scalar reference to rounding, not bit-for-bit.
namespace msk::kernels {

struct Table {
    std::string_view name;
    // sum a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum w[i] * a[i] * b[i]
    double (*wdot)(const double* w, const double* a, const double* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y[i] += alpha * w[i] * x[i]
    void (*waxpy)(double alpha, const double* w, const double* x, double* y, std::size_t n);
    // sum a[i]
    double (*sum)(const double* a, std::size_t n);
};

const Table& scalar();
// nullptr when the backend is not compiled in or the CPU lacks it.
const Table* avx2();
const Table* neon();

/// Backend in use. Picks the best supported one on first call unless
/// MSK_SIMD=scalar is set in the environment.
const Table& active();

/// Overrides the active backend (tests and benchmarking).
void set_active(const Table& table);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline double wdot(std::span<const double> w, std::span<const double> a, std::span<const double> b) {
    return active().wdot(w.data(), a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active().axpy(alpha, x.data(), y.data(), y.size());
}
inline void waxpy(double alpha, std::span<const double> w, std::span<const double> x, std::span<double> y) {
    active().waxpy(alpha, w.data(), x.data(), y.data(), y.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

}  // namespace msk::kernels
