#pragma once
// Dense vector kernels behind the similarity math. Scalar reference
// implementations plus AVX2 variants picked once at startup; the distance
// scans over embeddings are the hot loops of graph maintenance and scoring.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace xmem::vecops {

// Dispatched entry points. Sizes must match; unchecked here, callers
// validate dimensions at module boundaries.
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
void add_inplace(std::span<double> acc, std::span<const double> v);
void scale_inplace(std::span<double> v, double s);

// v / ||v||; returns false and leaves v untouched when ||v|| is ~0.
bool normalize_inplace(std::vector<double>& v);

// Scalar reference kernels, always available; the oracle side of the
// scalar/SIMD equivalence tests.
namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
void add_inplace(std::span<double> acc, std::span<const double> v);
void scale_inplace(std::span<double> v, double s);
} // namespace scalar

#if defined(XMEM_HAVE_AVX2_TU)
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
void add_inplace(std::span<double> acc, std::span<const double> v);
void scale_inplace(std::span<double> v, double s);
} // namespace avx2
#endif

// Name of the kernel set selected at runtime: "avx2" or "scalar".
std::string_view active_kernel();

// True when the running CPU and this build both support the AVX2 path.
bool avx2_available();

} // namespace xmem::vecops
