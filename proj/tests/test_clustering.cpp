#include <algorithm>
#include <set>

#include "doctest.h"
#include "dstyle/clustering.hpp"
#include "dstyle/errors.hpp"
#include "dstyle/random.hpp"
#include "oracles.hpp"

using namespace dstyle;

namespace {

// Three blobs: truth 0 high TETH, 1 high THW_RMS, 2 in between.
std::vector<Vec3> blobs(std::uint64_t seed, std::size_t per, std::vector<int>* truth) {
    Rng rng(seed);
    const std::array<Vec3, 3> centers{Vec3{0.2, 0.9, 0.7}, Vec3{0.85, 0.05, 0.0}, Vec3{0.45, 0.35, 0.1}};
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < per; ++i) {
        for (int c = 0; c < 3; ++c) {
            const auto& m = centers[static_cast<std::size_t>(c)];
            pts.push_back({m[0] + rng.normal(0, 0.04), m[1] + rng.normal(0, 0.04), m[2] + rng.normal(0, 0.04)});
            if (truth) truth->push_back(c);
        }
    }
    return pts;
}

double inertia_of(std::span<const Vec3> pts, const std::vector<Vec3>& c) {
    double s = 0.0;
    for (const auto& p : pts) {
        double best = 1e300;
        for (const auto& q : c) {
            const double d = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) + (p[2] - q[2]) * (p[2] - q[2]);
            best = std::min(best, d);
        }
        s += best;
    }
    return s;
}

}  // namespace

TEST_CASE("lloyd inertia never increases") {
    std::vector<int> truth;
    const auto pts = blobs(1, 40, &truth);
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Vec3> init;
        for (int k = 0; k < 3; ++k) init.push_back(pts[rng.below(pts.size())]);
        if (init[0] == init[1] || init[1] == init[2] || init[0] == init[2]) continue;
        const auto r = lloyd(pts, init, 100, 0.0);
        for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
            CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-12);
        }
        CHECK(r.inertia() == doctest::Approx(inertia_of(pts, r.centroids)).epsilon(1e-12));
    }
}

TEST_CASE("lloyd reseeds an empty cluster") {
    const std::vector<Vec3> pts{{0, 0, 0}, {0.1, 0, 0}, {1, 1, 1}, {1.1, 1, 1}};
    const auto r = lloyd(pts, {{0, 0, 0}, {1, 1, 1}, {5, 5, 5}}, 50, 0.0);
    CHECK(r.reseeds >= 1);
    std::set<std::uint32_t> used(r.labels.begin(), r.labels.end());
    CHECK(used.size() == 3);
}

TEST_CASE("kmeans recovers blobs in canonical order") {
    std::vector<int> truth;
    const auto pts = blobs(3, 50, &truth);
    KMeansConfig cfg;
    cfg.seed = 17;
    const auto model = kmeans_fit(pts, cfg);
    const auto labels = assign_all(model, pts);
    CHECK(labels == truth);
    CHECK(adjusted_rand_index(labels, truth) == 1.0);
    const auto cc = model.canonical_centroids();
    CHECK(cc[kAggressive][kTeth] > cc[kMedium][kTeth]);
    CHECK(cc[kCautious][kThwRms] > cc[kMedium][kThwRms]);
    // determinism
    const auto again = kmeans_fit(pts, cfg);
    CHECK(again.centroids == model.centroids);
    CHECK(again.label_order == model.label_order);
}

TEST_CASE("canonicalize orders by TETH then THW_RMS with ties to the lower index") {
    ClusterModel m;
    m.centroids = {{0.5, 0.2, 0}, {0.9, 0.1, 0}, {0.1, 0.8, 0}};
    const auto c = canonicalize(m);
    CHECK(c.label_order == std::vector<int>{2, 1, 0});
    m.centroids = {{0.5, 0.5, 0}, {0.5, 0.5, 0.1}, {0.1, 0.1, 0}};
    CHECK(canonicalize(m).label_order == std::vector<int>{0, 1, 2});
}

TEST_CASE("assign breaks ties toward the lower style") {
    ClusterModel m;
    m.centroids = {{0, 0, 0}, {1, 0, 0}, {0.5, 1, 0}};
    m.label_order = {1, 0, 2};
    CHECK(assign(m, {0.5, 0, 0}) == 0);
    CHECK(assign(m, {0.1, 0, 0}) == 1);
}

TEST_CASE("kmeans errors") {
    KMeansConfig cfg;
    const std::vector<Vec3> two{{0, 0, 0}, {1, 1, 1}};
    CHECK_THROWS_AS(kmeans_fit(two, cfg), ValidationError);
    const std::vector<Vec3> dup{{0, 0, 0}, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}};
    CHECK_THROWS_AS(kmeans_fit(dup, cfg), NumericError);
    cfg.restarts = 0;
    CHECK_THROWS_AS(kmeans_fit(dup, cfg), ValidationError);
}

TEST_CASE("adjusted Rand index matches pair counting") {
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 10 + rng.below(60);
        std::vector<int> a(n);
        std::vector<int> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng.below(3));
            b[i] = rng.bernoulli(0.7) ? a[i] : static_cast<int>(rng.below(4));
        }
        CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle::ari(a, b)).epsilon(1e-12));
    }
    const std::vector<int> x{0, 0, 1, 1, 2, 2};
    const std::vector<int> y{2, 2, 0, 0, 1, 1};
    CHECK(adjusted_rand_index(x, y) == 1.0);
    CHECK_THROWS_AS(adjusted_rand_index(x, std::vector<int>{0}), ValidationError);
}
