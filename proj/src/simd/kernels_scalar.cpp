#include "dstyle/simd/kernels.hpp"

namespace dstyle::simd {

namespace {

HeadwaySums headway_sums_scalar(const double* d, const double* v, const std::uint8_t* valid,
                                std::size_t n, double thw_star) {
    HeadwaySums out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!valid[i]) continue;
        const double thw = d[i] / v[i];
        out.sum_sq += thw * thw;
        ++out.n_valid;
        if (thw >= 0.0 && thw <= thw_star) {
            ++out.n_below;
            out.deficit += thw_star - thw;
        }
    }
    return out;
}

void nearest_centroid_scalar(const double* points, std::size_t n, const double* centroids,
                             std::size_t k, std::uint32_t* label, double* dist2) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* p = points + 3 * i;
        double best = 0.0;
        std::uint32_t best_j = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double* c = centroids + 3 * j;
            const double dx = p[0] - c[0];
            const double dy = p[1] - c[1];
            const double dz = p[2] - c[2];
            const double dd = dx * dx + dy * dy + dz * dz;
            if (j == 0 || dd < best) {
                best = dd;
                best_j = static_cast<std::uint32_t>(j);
            }
        }
        label[i] = best_j;
        dist2[i] = best;
    }
}

void rule_forward_scalar(const double* mu, std::size_t n, const double* consequents, double* w,
                         double* num, double* den) {
    for (std::size_t s = 0; s < n; ++s) {
        const double* m = mu + 9 * s;
        double nn = 0.0;
        double dd = 0.0;
        for (int i1 = 0; i1 < 3; ++i1) {
            for (int i2 = 0; i2 < 3; ++i2) {
                const double p = m[i1] * m[3 + i2];
                for (int i3 = 0; i3 < 3; ++i3) {
                    const int j = 9 * i1 + 3 * i2 + i3;
                    const double wj = p * m[6 + i3];
                    if (w) w[27 * s + j] = wj;
                    nn += wj * consequents[j];
                    dd += wj;
                }
            }
        }
        num[s] = nn;
        den[s] = dd;
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", &headway_sums_scalar, &nearest_centroid_scalar,
                                   &rule_forward_scalar};
    return table;
}

}  // namespace dstyle::simd
