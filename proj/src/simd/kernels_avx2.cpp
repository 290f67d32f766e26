#include <immintrin.h>

#include <cstring>

#include "dstyle/simd/kernels.hpp"

namespace dstyle::simd {

namespace {

inline __m256d lane_mask_from_bytes(const std::uint8_t* valid) {
    std::int32_t packed;
    std::memcpy(&packed, valid, sizeof packed);
    const __m256i wide = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
    const __m256i on = _mm256_cmpgt_epi64(wide, _mm256_setzero_si256());
    return _mm256_castsi256_pd(on);
}

inline double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

inline std::size_t hsum_count(__m256i v) {
    alignas(32) std::int64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    return static_cast<std::size_t>(lanes[0] + lanes[1] + lanes[2] + lanes[3]);
}

HeadwaySums headway_sums_avx2(const double* d, const double* v, const std::uint8_t* valid,
                              std::size_t n, double thw_star) {
    const __m256d star = _mm256_set1_pd(thw_star);
    const __m256d zero = _mm256_setzero_pd();
    __m256d sum_sq = zero;
    __m256d deficit = zero;
    __m256i n_valid = _mm256_setzero_si256();
    __m256i n_below = _mm256_setzero_si256();

    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d ok = lane_mask_from_bytes(valid + i);
        const __m256d thw = _mm256_div_pd(_mm256_loadu_pd(d + i), _mm256_loadu_pd(v + i));
        sum_sq = _mm256_add_pd(sum_sq, _mm256_and_pd(ok, _mm256_mul_pd(thw, thw)));
        const __m256d below = _mm256_and_pd(
            ok, _mm256_and_pd(_mm256_cmp_pd(thw, zero, _CMP_GE_OQ), _mm256_cmp_pd(thw, star, _CMP_LE_OQ)));
        deficit = _mm256_add_pd(deficit, _mm256_and_pd(below, _mm256_sub_pd(star, thw)));
        // Masks are all-ones (-1) per active lane.
        n_valid = _mm256_sub_epi64(n_valid, _mm256_castpd_si256(ok));
        n_below = _mm256_sub_epi64(n_below, _mm256_castpd_si256(below));
    }

    HeadwaySums out;
    out.sum_sq = hsum(sum_sq);
    out.deficit = hsum(deficit);
    out.n_valid = hsum_count(n_valid);
    out.n_below = hsum_count(n_below);

    const HeadwaySums tail = scalar_kernels().headway_sums(d + i, v + i, valid + i, n - i, thw_star);
    out.sum_sq += tail.sum_sq;
    out.deficit += tail.deficit;
    out.n_valid += tail.n_valid;
    out.n_below += tail.n_below;
    return out;
}

void nearest_centroid_avx2(const double* points, std::size_t n, const double* centroids,
                           std::size_t k, std::uint32_t* label, double* dist2) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double* p = points + 3 * i;
        const __m256d px = _mm256_set_pd(p[9], p[6], p[3], p[0]);
        const __m256d py = _mm256_set_pd(p[10], p[7], p[4], p[1]);
        const __m256d pz = _mm256_set_pd(p[11], p[8], p[5], p[2]);
        __m256d best = _mm256_setzero_pd();
        __m256d best_j = _mm256_setzero_pd();
        for (std::size_t j = 0; j < k; ++j) {
            const double* c = centroids + 3 * j;
            const __m256d dx = _mm256_sub_pd(px, _mm256_set1_pd(c[0]));
            const __m256d dy = _mm256_sub_pd(py, _mm256_set1_pd(c[1]));
            const __m256d dz = _mm256_sub_pd(pz, _mm256_set1_pd(c[2]));
            const __m256d dd = _mm256_add_pd(
                _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), _mm256_mul_pd(dz, dz));
            if (j == 0) {
                best = dd;
                continue;
            }
            const __m256d closer = _mm256_cmp_pd(dd, best, _CMP_LT_OQ);
            best = _mm256_blendv_pd(best, dd, closer);
            best_j = _mm256_blendv_pd(best_j, _mm256_set1_pd(static_cast<double>(j)), closer);
        }
        alignas(32) double bj[4];
        _mm256_store_pd(bj, best_j);
        _mm256_storeu_pd(dist2 + i, best);
        for (int l = 0; l < 4; ++l) label[i + l] = static_cast<std::uint32_t>(bj[l]);
    }
    scalar_kernels().nearest_centroid(points + 3 * i, n - i, centroids, k, label + i, dist2 + i);
}

void rule_forward_avx2(const double* mu, std::size_t n, const double* consequents, double* w,
                       double* num, double* den) {
    std::size_t s = 0;
    for (; s + 4 <= n; s += 4) {
        const double* m = mu + 9 * s;
        __m256d lanes[9];
        for (int q = 0; q < 9; ++q) lanes[q] = _mm256_set_pd(m[27 + q], m[18 + q], m[9 + q], m[q]);
        __m256d nn = _mm256_setzero_pd();
        __m256d dd = _mm256_setzero_pd();
        alignas(32) double wl[4];
        for (int i1 = 0; i1 < 3; ++i1) {
            for (int i2 = 0; i2 < 3; ++i2) {
                const __m256d p = _mm256_mul_pd(lanes[i1], lanes[3 + i2]);
                for (int i3 = 0; i3 < 3; ++i3) {
                    const int j = 9 * i1 + 3 * i2 + i3;
                    const __m256d wj = _mm256_mul_pd(p, lanes[6 + i3]);
                    if (w) {
                        _mm256_store_pd(wl, wj);
                        for (int l = 0; l < 4; ++l) w[27 * (s + l) + j] = wl[l];
                    }
                    nn = _mm256_add_pd(nn, _mm256_mul_pd(wj, _mm256_set1_pd(consequents[j])));
                    dd = _mm256_add_pd(dd, wj);
                }
            }
        }
        _mm256_storeu_pd(num + s, nn);
        _mm256_storeu_pd(den + s, dd);
    }
    scalar_kernels().rule_forward(mu + 9 * s, n - s, consequents, w ? w + 27 * s : nullptr, num + s,
                                  den + s);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
    static const KernelTable table{"avx2", &headway_sums_avx2, &nearest_centroid_avx2,
                                   &rule_forward_avx2};
    return table;
}

}  // namespace dstyle::simd
