#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "dstyle/random.hpp"
#include "dstyle/simd/kernels.hpp"

using namespace dstyle;

TEST_CASE("scalar table is always available") {
    CHECK(simd::scalar_kernels().name == "scalar");
    const auto& active = simd::active_kernels();
    if (const char* env = std::getenv("DSTYLE_SIMD"); env && std::string_view(env) == "scalar") {
        CHECK(active.name == "scalar");
    }
}

TEST_CASE("AVX2 kernels agree with the scalar reference") {
    const auto* avx = simd::avx2_kernels();
    if (avx == nullptr) {
        MESSAGE("AVX2 variant not available on this machine; skipped");
        return;
    }
    const auto& ref = simd::scalar_kernels();
    Rng rng(77);

    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 400u, 599u}) {
        std::vector<double> d(n);
        std::vector<double> v(n);
        std::vector<std::uint8_t> valid(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = rng.uniform(5.0, 35.0);
            d[i] = v[i] * rng.uniform(0.2, 3.5);
            valid[i] = rng.bernoulli(0.95) ? 1 : 0;
        }
        const auto a = ref.headway_sums(d.data(), v.data(), valid.data(), n, 1.5);
        const auto b = avx->headway_sums(d.data(), v.data(), valid.data(), n, 1.5);
        CHECK(a.n_valid == b.n_valid);
        CHECK(a.n_below == b.n_below);
        CHECK(a.sum_sq == doctest::Approx(b.sum_sq).epsilon(1e-13));
        CHECK(a.deficit == doctest::Approx(b.deficit).epsilon(1e-13));
    }

    for (std::size_t n : {1u, 2u, 7u, 64u, 333u}) {
        for (std::size_t k : {1u, 2u, 3u, 5u}) {
            std::vector<double> pts(3 * n);
            std::vector<double> cen(3 * k);
            for (auto& p : pts) p = rng.uniform();
            for (auto& c : cen) c = rng.uniform();
            if (k > 1) {
                // exact tie for the first point
                for (int f = 0; f < 3; ++f) cen[3 + f] = cen[f];
            }
            std::vector<std::uint32_t> la(n);
            std::vector<std::uint32_t> lb(n);
            std::vector<double> da(n);
            std::vector<double> db(n);
            ref.nearest_centroid(pts.data(), n, cen.data(), k, la.data(), da.data());
            avx->nearest_centroid(pts.data(), n, cen.data(), k, lb.data(), db.data());
            CHECK(la == lb);
            CHECK(da == db);
        }
    }

    for (std::size_t n : {1u, 3u, 4u, 9u, 250u}) {
        std::vector<double> mu(9 * n);
        for (auto& m : mu) m = rng.uniform();
        std::vector<double> c(27);
        for (auto& x : c) x = rng.uniform(-2.0, 2.0);
        std::vector<double> wa(27 * n);
        std::vector<double> wb(27 * n);
        std::vector<double> na(n);
        std::vector<double> nb(n);
        std::vector<double> qa(n);
        std::vector<double> qb(n);
        ref.rule_forward(mu.data(), n, c.data(), wa.data(), na.data(), qa.data());
        avx->rule_forward(mu.data(), n, c.data(), wb.data(), nb.data(), qb.data());
        CHECK(wa == wb);
        CHECK(na == nb);
        CHECK(qa == qb);
        avx->rule_forward(mu.data(), n, c.data(), nullptr, nb.data(), qb.data());
        CHECK(na == nb);
    }
}
