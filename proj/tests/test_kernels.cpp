#include "doctest.h"

#include <cstring>
#include <vector>

#include "typoflow/kernels.hpp"
#include "typoflow/rng.hpp"

using namespace typoflow;

namespace {

std::vector<float> random_vec(Rng& rng, size_t n) {
    std::vector<float> v(n);
    for (float& x : v) x = rng.next_normal();
    return v;
}

}  // namespace

TEST_CASE("gemm_nn scalar reference against hand arithmetic") {
    // [[1,2],[3,4]] x [[5],[6]] = [[17],[39]]
    const std::vector<float> a{1, 2, 3, 4};
    const std::vector<float> b{5, 6};
    std::vector<float> c(2);
    kern::scalar_table().gemm_nn(a.data(), b.data(), c.data(), 2, 2, 1);
    CHECK(c[0] == 17.f);
    CHECK(c[1] == 39.f);
}

TEST_CASE("gemm_tn scalar reference against hand arithmetic") {
    // a^T b with a = [[1,2],[3,4]] (L=2, M=2), b = [[5],[6]] (L=2, N=1)
    // c[i,j] = sum_l a[l,i] b[l,j] -> c = [[1*5+3*6],[2*5+4*6]] = [[23],[34]]
    const std::vector<float> a{1, 2, 3, 4};
    const std::vector<float> b{5, 6};
    std::vector<float> c(2);
    kern::scalar_table().gemm_tn(a.data(), b.data(), c.data(), 2, 2, 1);
    CHECK(c[0] == 23.f);
    CHECK(c[1] == 34.f);
}

TEST_CASE("avx2 variants match scalar reference bitwise") {
    if (!kern::avx2_supported()) return;
    Rng rng(0x5eed);
    const auto& sc = kern::scalar_table();
    const auto& av = kern::avx2_table();

    // Deliberately awkward sizes to exercise vector tails.
    const int sizes[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 8, 8}, {13, 17, 9}, {32, 64, 33}};
    for (const auto& mkn : sizes) {
        const int m = mkn[0], k = mkn[1], n = mkn[2];
        auto a = random_vec(rng, static_cast<size_t>(m) * k);
        auto b = random_vec(rng, static_cast<size_t>(k) * n);
        std::vector<float> c0(static_cast<size_t>(m) * n), c1(c0.size());
        sc.gemm_nn(a.data(), b.data(), c0.data(), m, k, n);
        av.gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
        CHECK(std::memcmp(c0.data(), c1.data(), c0.size() * sizeof(float)) == 0);

        auto at = random_vec(rng, static_cast<size_t>(k) * m);
        auto bt = random_vec(rng, static_cast<size_t>(k) * n);
        std::vector<float> d0(static_cast<size_t>(m) * n), d1(d0.size());
        sc.gemm_tn(at.data(), bt.data(), d0.data(), k, m, n);
        av.gemm_tn(at.data(), bt.data(), d1.data(), k, m, n);
        CHECK(std::memcmp(d0.data(), d1.data(), d0.size() * sizeof(float)) == 0);
    }

    for (int64_t n : {1, 7, 8, 9, 63, 64, 100}) {
        auto x = random_vec(rng, static_cast<size_t>(n));
        auto y = random_vec(rng, static_cast<size_t>(n));
        std::vector<float> r0(static_cast<size_t>(n)), r1(static_cast<size_t>(n));

        sc.vadd(x.data(), y.data(), r0.data(), n);
        av.vadd(x.data(), y.data(), r1.data(), n);
        CHECK(std::memcmp(r0.data(), r1.data(), r0.size() * sizeof(float)) == 0);

        sc.vsub(x.data(), y.data(), r0.data(), n);
        av.vsub(x.data(), y.data(), r1.data(), n);
        CHECK(std::memcmp(r0.data(), r1.data(), r0.size() * sizeof(float)) == 0);

        sc.vmul(x.data(), y.data(), r0.data(), n);
        av.vmul(x.data(), y.data(), r1.data(), n);
        CHECK(std::memcmp(r0.data(), r1.data(), r0.size() * sizeof(float)) == 0);

        sc.vscale(x.data(), 0.37f, r0.data(), n);
        av.vscale(x.data(), 0.37f, r1.data(), n);
        CHECK(std::memcmp(r0.data(), r1.data(), r0.size() * sizeof(float)) == 0);

        std::vector<float> y0 = y, y1 = y;
        sc.vaxpy(1.25f, x.data(), y0.data(), n);
        av.vaxpy(1.25f, x.data(), y1.data(), n);
        CHECK(std::memcmp(y0.data(), y1.data(), y0.size() * sizeof(float)) == 0);
    }
}

TEST_CASE("backend selection") {
    const kern::Backend saved = kern::active_backend();
    kern::set_backend(kern::Backend::Scalar);
    CHECK(kern::active_backend() == kern::Backend::Scalar);
    CHECK(std::strcmp(kern::active().name, "scalar") == 0);
    if (kern::avx2_supported()) {
        kern::set_backend(kern::Backend::Avx2);
        CHECK(std::strcmp(kern::active().name, "avx2") == 0);
    }
    kern::set_backend(saved);
}
