#include "dstyle/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "dstyle/errors.hpp"
#include "dstyle/random.hpp"
#include "dstyle/simd/kernels.hpp"

namespace dstyle {

namespace {

double dist2(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

void nearest(std::span<const Vec3> points, const std::vector<Vec3>& centroids,
             std::vector<std::uint32_t>& labels, std::vector<double>& d2) {
    labels.resize(points.size());
    d2.resize(points.size());
    simd::active_kernels().nearest_centroid(points.data()->data(), points.size(), centroids.data()->data(),
                                            centroids.size(), labels.data(), d2.data());
}

std::vector<Vec3> kmeanspp(std::span<const Vec3> points, int k, Rng& rng) {
    std::vector<Vec3> centroids;
    centroids.push_back(points[rng.below(points.size())]);
    std::vector<double> d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = dist2(points[i], centroids[0]);

    while (static_cast<int>(centroids.size()) < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        if (!(total > 0.0)) {
            throw NumericError("k-means: fewer distinct points than clusters");
        }
        const double target = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = points.size() - 1;
        for (std::size_t i = 0; i < points.size(); ++i) {
            acc += d2[i];
            if (acc > target && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        // Floating-point slack can leave target past the last positive weight.
        while (d2[pick] == 0.0 && pick > 0) --pick;
        centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], dist2(points[i], centroids.back()));
        }
    }
    return centroids;
}

}  // namespace

std::vector<Vec3> ClusterModel::canonical_centroids() const {
    std::vector<Vec3> out(centroids.size());
    for (std::size_t raw = 0; raw < centroids.size(); ++raw) {
        out[static_cast<std::size_t>(label_order[raw])] = centroids[raw];
    }
    return out;
}

LloydResult lloyd(std::span<const Vec3> points, std::vector<Vec3> centroids, int max_iters, double tol) {
    LloydResult r;
    r.centroids = std::move(centroids);
    const std::size_t k = r.centroids.size();
    std::vector<double> d2;
    double prev = std::numeric_limits<double>::infinity();

    for (int iter = 0;; ++iter) {
        nearest(points, r.centroids, r.labels, d2);
        const double inertia = std::accumulate(d2.begin(), d2.end(), 0.0);
        r.inertia_history.push_back(inertia);
        if (iter >= max_iters) break;
        if (std::isfinite(prev) && prev - inertia <= tol * prev) break;
        prev = inertia;

        std::vector<Vec3> sums(k, Vec3{0.0, 0.0, 0.0});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            auto& s = sums[r.labels[i]];
            for (int f = 0; f < 3; ++f) s[static_cast<std::size_t>(f)] += points[i][static_cast<std::size_t>(f)];
            ++counts[r.labels[i]];
        }
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] > 0) {
                const double c = static_cast<double>(counts[j]);
                r.centroids[j] = {sums[j][0] / c, sums[j][1] / c, sums[j][2] / c};
                continue;
            }
            // Empty cluster: move it onto the point farthest from its centroid.
            const auto far = std::max_element(d2.begin(), d2.end());
            if (far == d2.end() || !(*far > 0.0)) {
                throw NumericError("k-means: empty cluster cannot be reseeded (fewer distinct points than clusters)");
            }
            const auto idx = static_cast<std::size_t>(far - d2.begin());
            r.centroids[j] = points[idx];
            *far = 0.0;
            ++r.reseeds;
        }
    }
    return r;
}

ClusterModel kmeans_fit(std::span<const Vec3> points, const KMeansConfig& cfg) {
    if (cfg.k < 2 || cfg.restarts < 1 || cfg.max_iters < 1 || !(cfg.tol >= 0.0)) {
        throw ValidationError("k-means: invalid configuration");
    }
    if (points.size() < static_cast<std::size_t>(cfg.k)) {
        throw ValidationError("k-means: need at least k points, got " + std::to_string(points.size()));
    }

    ClusterModel best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        auto run = lloyd(points, kmeanspp(points, cfg.k, rng), cfg.max_iters, cfg.tol);
        if (run.inertia() < best.inertia) {
            best.centroids = std::move(run.centroids);
            best.inertia = run.inertia_history.back();
        }
    }

    for (std::size_t a = 0; a < best.centroids.size(); ++a) {
        for (std::size_t b = a + 1; b < best.centroids.size(); ++b) {
            if (best.centroids[a] == best.centroids[b]) {
                throw NumericError("k-means: coincident centroids (fewer distinct points than clusters)");
            }
        }
    }
    return canonicalize(std::move(best));
}

ClusterModel canonicalize(ClusterModel model) {
    const int k = model.k();
    model.label_order.assign(static_cast<std::size_t>(k), -1);
    std::vector<bool> taken(static_cast<std::size_t>(k), false);

    auto take_max = [&](std::size_t feature, int style) {
        int pick = -1;
        for (int raw = 0; raw < k; ++raw) {
            if (taken[static_cast<std::size_t>(raw)]) continue;
            if (pick < 0 || model.centroids[static_cast<std::size_t>(raw)][feature] >
                                model.centroids[static_cast<std::size_t>(pick)][feature]) {
                pick = raw;
            }
        }
        taken[static_cast<std::size_t>(pick)] = true;
        model.label_order[static_cast<std::size_t>(pick)] = style;
    };

    take_max(kTeth, kAggressive);
    take_max(kThwRms, kCautious);
    int next = 2;
    for (int raw = 0; raw < k; ++raw) {
        if (!taken[static_cast<std::size_t>(raw)]) model.label_order[static_cast<std::size_t>(raw)] = next++;
    }
    return model;
}

int assign(const ClusterModel& model, const Vec3& x) {
    const auto canon = model.canonical_centroids();
    int best = 0;
    double best_d = dist2(x, canon[0]);
    for (std::size_t s = 1; s < canon.size(); ++s) {
        const double d = dist2(x, canon[s]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(s);
        }
    }
    return best;
}

std::vector<int> assign_all(const ClusterModel& model, std::span<const Vec3> points) {
    const auto canon = model.canonical_centroids();
    std::vector<std::uint32_t> labels;
    std::vector<double> d2;
    nearest(points, canon, labels, d2);
    return {labels.begin(), labels.end()};
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw ValidationError("adjusted_rand_index: label vectors differ in length");
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;

    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows;
    std::map<int, double> cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
    double sum_ij = 0.0;
    for (const auto& [key, m] : table) sum_ij += pairs(m);
    double sum_a = 0.0;
    for (const auto& [key, m] : rows) sum_a += pairs(m);
    double sum_b = 0.0;
    for (const auto& [key, m] : cols) sum_b += pairs(m);

    const double expected = sum_a * sum_b / pairs(n);
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;  // both labelings trivial
    return (sum_ij - expected) / (max_index - expected);
}

}  // namespace dstyle
