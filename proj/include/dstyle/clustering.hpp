#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dstyle/features.hpp"

namespace dstyle {

struct KMeansConfig {
    int k{3};
    int restarts{50};
    int max_iters{300};
    double tol{1e-6};  // stop when relative inertia improvement drops below this
    std::uint64_t seed{0};
};

/// Canonical driving styles (0-based here; written 1-based in files and
/// reports). Style 0 = most aggressive, 1 = least aggressive, 2 = medium.
enum Style : int { kAggressive = 0, kCautious = 1, kMedium = 2 };

struct ClusterModel {
    std::vector<Vec3> centroids;  // raw cluster order, normalized feature space
    double inertia{0.0};
    std::vector<int> label_order;  // raw cluster index -> canonical style

    int k() const { return static_cast<int>(centroids.size()); }

    /// Centroids permuted into canonical style order.
    std::vector<Vec3> canonical_centroids() const;
};

/// One Lloyd run from explicit starting centroids; exposed for tests.
struct LloydResult {
    std::vector<Vec3> centroids;
    std::vector<std::uint32_t> labels;
    std::vector<double> inertia_history;  // one entry per assignment step
    int reseeds{0};
    double inertia() const { return inertia_history.back(); }
};

LloydResult lloyd(std::span<const Vec3> points, std::vector<Vec3> centroids, int max_iters, double tol);

/// k-means++ seeding followed by Lloyd iterations, best of `restarts` runs by
/// inertia (earliest restart wins ties). The result is canonicalized.
/// Throws ValidationError for fewer points than k or an invalid config, and
/// NumericError when the data has fewer distinct points than k.
ClusterModel kmeans_fit(std::span<const Vec3> points, const KMeansConfig& cfg);

/// Sets label_order: style 0 = highest TETH centroid, style 1 = highest
/// THW_RMS among the rest, remaining clusters follow in raw order. Ties go to
/// the lower raw index.
ClusterModel canonicalize(ClusterModel model);

/// Canonical style of the nearest centroid; ties go to the lower style.
int assign(const ClusterModel& model, const Vec3& x);
std::vector<int> assign_all(const ClusterModel& model, std::span<const Vec3> points);

/// Adjusted Rand index of two labelings of the same points.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace dstyle
