#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference in
// kernels_scalar.cpp and, on x86-64, an AVX2 variant selected at runtime.
//
// Equivalence contract between variants:
//   - nearest_centroid and rule_forward evaluate each lane with the same
//     operation order as the scalar loop and must agree bit for bit;
//   - headway_sums reassociates its reductions, so sums agree to rounding
//     and the counts agree exactly.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace dstyle::simd {

struct HeadwaySums {
    double sum_sq{0.0};       // sum of THW^2 over valid samples
    double deficit{0.0};      // sum of (thw_star - THW) over samples with 0 <= THW <= thw_star
    std::size_t n_valid{0};
    std::size_t n_below{0};   // valid samples with 0 <= THW <= thw_star
};

struct KernelTable {
    std::string_view name;

    /// THW = d / v per valid sample (valid[i] != 0), reduced as above.
    HeadwaySums (*headway_sums)(const double* d, const double* v, const std::uint8_t* valid,
                                std::size_t n, double thw_star);

    /// points: n x 3 row-major, centroids: k x 3 row-major. Writes the index of
    /// the nearest centroid (lowest index on ties) and its squared distance.
    void (*nearest_centroid)(const double* points, std::size_t n, const double* centroids,
                             std::size_t k, std::uint32_t* label, double* dist2);

    /// Zero-order TSK forward pass over a batch with 3 inputs x 3 labels.
    /// mu: n x 9 row-major memberships, index 3*input + label.
    /// Rule j = 9*i1 + 3*i2 + i3 has strength (mu[i1] * mu[3+i2]) * mu[6+i3].
    /// w (n x 27) may be null. num[s] = sum_j w_j c_j, den[s] = sum_j w_j,
    /// both accumulated in rule order.
    void (*rule_forward)(const double* mu, std::size_t n, const double* consequents, double* w,
                         double* num, double* den);
};

const KernelTable& scalar_kernels();

/// Null when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// Kernel table used by the library. The best supported variant, unless the
/// environment variable DSTYLE_SIMD=scalar forces the reference.
const KernelTable& active_kernels();

}  // namespace dstyle::simd
