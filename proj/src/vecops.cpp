#include "xmem/vecops.hpp"

#include <cmath>

namespace xmem::vecops {

namespace scalar {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double squared_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

void add_inplace(std::span<double> acc, std::span<const double> v) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

void scale_inplace(std::span<double> v, double s) {
    for (double& x : v) x *= s;
}

} // namespace scalar

namespace {

struct Kernels {
    double (*dot)(std::span<const double>, std::span<const double>);
    double (*squared_norm)(std::span<const double>);
    void (*add_inplace)(std::span<double>, std::span<const double>);
    void (*scale_inplace)(std::span<double>, double);
    std::string_view name;
};

Kernels select_kernels() {
#if defined(XMEM_HAVE_AVX2_TU)
    if (avx2_available()) {
        return {&avx2::dot, &avx2::squared_norm, &avx2::add_inplace,
                &avx2::scale_inplace, "avx2"};
    }
#endif
    return {&scalar::dot, &scalar::squared_norm, &scalar::add_inplace,
            &scalar::scale_inplace, "scalar"};
}

const Kernels& kernels() {
    static const Kernels k = select_kernels();
    return k;
}

} // namespace

bool avx2_available() {
#if defined(XMEM_HAVE_AVX2_TU) && defined(__x86_64__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::string_view active_kernel() { return kernels().name; }

double dot(std::span<const double> a, std::span<const double> b) {
    return kernels().dot(a, b);
}

double squared_norm(std::span<const double> v) { return kernels().squared_norm(v); }

void add_inplace(std::span<double> acc, std::span<const double> v) {
    kernels().add_inplace(acc, v);
}

void scale_inplace(std::span<double> v, double s) { kernels().scale_inplace(v, s); }

bool normalize_inplace(std::vector<double>& v) {
    double n2 = squared_norm(v);
    if (n2 < 1e-24 || !std::isfinite(n2)) return false;
    scale_inplace(v, 1.0 / std::sqrt(n2));
    return true;
}

} // namespace xmem::vecops
