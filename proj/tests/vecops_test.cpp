// Dense kernels: scalar reference fixtures plus scalar/dispatched (and,
// where built, AVX2) equivalence over random vectors of awkward lengths.
#include "xmem/vecops.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace xmem;

TEST_CASE("scalar kernel fixtures") {
    std::vector<double> a{1.0, 2.0, 3.0};
    std::vector<double> b{4.0, -5.0, 6.0};
    CHECK(vecops::scalar::dot(a, b) == doctest::Approx(12.0));
    CHECK(vecops::scalar::squared_norm(a) == doctest::Approx(14.0));

    std::vector<double> acc{1.0, 1.0, 1.0};
    vecops::scalar::add_inplace(acc, a);
    CHECK(acc == std::vector<double>{2.0, 3.0, 4.0});

    vecops::scalar::scale_inplace(acc, 0.5);
    CHECK(acc == std::vector<double>{1.0, 1.5, 2.0});
}

TEST_CASE("normalize_inplace") {
    std::vector<double> v{3.0, 4.0};
    REQUIRE(vecops::normalize_inplace(v));
    CHECK(v[0] == doctest::Approx(0.6));
    CHECK(v[1] == doctest::Approx(0.8));
    CHECK(std::sqrt(vecops::squared_norm(v)) == doctest::Approx(1.0));

    std::vector<double> zero{0.0, 0.0};
    CHECK_FALSE(vecops::normalize_inplace(zero));
    CHECK(zero == std::vector<double>{0.0, 0.0}); // untouched on failure
}

TEST_CASE("dispatched kernels match scalar reference") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // Lengths straddling SIMD width multiples, including remainders.
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 64u, 255u, 256u, 1000u}) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = gauss(rng);
            b[i] = gauss(rng);
        }
        CHECK(vecops::dot(a, b) == doctest::Approx(vecops::scalar::dot(a, b)).epsilon(1e-12));
        CHECK(vecops::squared_norm(a) ==
              doctest::Approx(vecops::scalar::squared_norm(a)).epsilon(1e-12));

        std::vector<double> acc1 = a, acc2 = a;
        vecops::add_inplace(acc1, b);
        vecops::scalar::add_inplace(acc2, b);
        for (std::size_t i = 0; i < n; ++i) CHECK(acc1[i] == doctest::Approx(acc2[i]));

        std::vector<double> s1 = a, s2 = a;
        vecops::scale_inplace(s1, 1.75);
        vecops::scalar::scale_inplace(s2, 1.75);
        for (std::size_t i = 0; i < n; ++i) CHECK(s1[i] == doctest::Approx(s2[i]));
    }
}

#if defined(XMEM_HAVE_AVX2_TU)
TEST_CASE("avx2 kernels match scalar reference when runnable") {
    if (!vecops::avx2_available()) return; // build has the TU but the CPU lacks AVX2
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 13u, 256u, 257u}) {
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = gauss(rng);
            b[i] = gauss(rng);
        }
        CHECK(vecops::avx2::dot(a, b) ==
              doctest::Approx(vecops::scalar::dot(a, b)).epsilon(1e-12));
        CHECK(vecops::avx2::squared_norm(a) ==
              doctest::Approx(vecops::scalar::squared_norm(a)).epsilon(1e-12));
    }
}
#endif

TEST_CASE("active kernel name is coherent") {
    auto name = vecops::active_kernel();
    CHECK((name == "avx2" || name == "scalar"));
    if (name == "avx2") CHECK(vecops::avx2_available());
}
