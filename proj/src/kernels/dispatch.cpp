#include <atomic>
#include <cstdlib>
#include <string_view>

#include "msk/kernels.hpp"

namespace msk::kernels {

#if defined(MSK_BUILD_AVX2)
namespace avx2_impl {
double dot(const double*, const double*, std::size_t);
double wdot(const double*, const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void waxpy(double, const double*, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
}  // namespace avx2_impl
#endif

#if defined(__aarch64__)
namespace neon_impl {
double dot(const double*, const double*, std::size_t);
double wdot(const double*, const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void waxpy(double, const double*, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
}  // namespace neon_impl
#endif

const Table* avx2() {
#if defined(MSK_BUILD_AVX2)
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    static const Table table{"avx2", avx2_impl::dot, avx2_impl::wdot, avx2_impl::axpy,
                             avx2_impl::waxpy, avx2_impl::sum};
    return supported ? &table : nullptr;
#else
    return nullptr;
#endif
}

const Table* neon() {
#if defined(__aarch64__)
    static const Table table{"neon", neon_impl::dot, neon_impl::wdot, neon_impl::axpy,
                             neon_impl::waxpy, neon_impl::sum};
    return &table;
#else
    return nullptr;
#endif
}

namespace {

const Table* pick_default() {
    if (const char* env = std::getenv("MSK_SIMD")) {
        if (std::string_view(env) == "scalar") return &scalar();
    }
    if (const Table* t = avx2()) return t;
    if (const Table* t = neon()) return t;
    return &scalar();
}

std::atomic<const Table*>& slot() {
    static std::atomic<const Table*> current{pick_default()};
    return current;
}

}  // namespace

const Table& active() { return *slot().load(std::memory_order_acquire); }

void set_active(const Table& table) { slot().store(&table, std::memory_order_release); }

}  // namespace msk::kernels
