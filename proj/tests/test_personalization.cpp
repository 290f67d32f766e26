#include <cmath>

#include "doctest.h"
#include "dstyle/errors.hpp"
#include "dstyle/personalization.hpp"
#include "dstyle/random.hpp"
#include "oracles.hpp"

using namespace dstyle;

namespace {

ClusterStats stats_of(double mean, double sd, double mn, double mx, double tmin, double tmean, double tmax) {
    ClusterStats s;
    s.count = 10;
    s.thw_mean = mean;
    s.thw_sd = sd;
    s.thw_min = mn;
    s.thw_max = mx;
    s.tith_min = tmin;
    s.tith_mean = tmean;
    s.tith_max = tmax;
    return s;
}

}  // namespace

TEST_CASE("cluster statistics") {
    const std::vector<double> thw{1.0, 3.0, 2.0, 2.0, 2.0};
    const std::vector<double> tith{0.5, 0.1, 0.0, 0.0, 0.0};
    const std::vector<int> styles{0, 0, 1, 1, 2};
    const auto st = compute_cluster_stats(thw, tith, styles);
    REQUIRE(st.size() == 3);
    CHECK(st[0].thw_mean == 2.0);
    CHECK(st[0].thw_sd == 1.0);  // population sd
    CHECK(st[0].tith_max == 0.5);
    CHECK(st[0].tith_mean == doctest::Approx(0.3));
    CHECK(st[1].thw_sd == 0.0);
    CHECK(st[1].thw_min == st[1].thw_max);
    CHECK(st[2].count == 1);
    const std::vector<int> missing{0, 0, 1, 1, 1};
    CHECK_THROWS_AS(compute_cluster_stats(thw, tith, missing), ValidationError);
    CHECK_THROWS_AS(compute_cluster_stats(thw, std::vector<double>{0.1}, styles), ValidationError);
}

TEST_CASE("three defining points") {
    const auto s = stats_of(1.08, 0.27, 0.6, 1.5, 0.0, 0.6, 1.0);
    const auto p = plane_points(s);
    CHECK(p[0].thw_rms == 0.6);
    CHECK(p[0].tith == 1.0);
    CHECK(p[0].thw_hat == 1.08 - 0.27);
    CHECK(p[1].thw_rms == 1.5);
    CHECK(p[1].tith == 0.0);
    CHECK(p[1].thw_hat == 1.08 + 0.27);
    CHECK(p[2].thw_rms == 1.08);
    CHECK(p[2].tith == 0.6);
    CHECK(p[2].thw_hat == 1.08);
}

TEST_CASE("plane interpolates its points and matches Cramer's rule") {
    Rng rng(3);
    int fitted = 0;
    for (int t = 0; t < 500; ++t) {
        const double mn = rng.uniform(0.5, 1.5);
        const double mx = mn + rng.uniform(0.2, 1.5);
        const double mean = rng.uniform(mn + 0.05, mx - 0.05);
        const double tmin = rng.uniform(0.0, 0.3);
        const double tmax = tmin + rng.uniform(0.2, 0.7);
        const auto s = stats_of(mean, rng.uniform(0.05, 0.6), mn, mx, tmin, rng.uniform(tmin, tmax), tmax);
        PlaneModel p;
        try {
            p = fit_plane(s, false);
        } catch (const NumericError&) {
            continue;
        }
        ++fitted;
        std::array<std::array<double, 3>, 3> pts{};
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::abs(p.raw(p.points[i].thw_rms, p.points[i].tith) - p.points[i].thw_hat) <= 1e-12);
            pts[i] = {p.points[i].thw_rms, p.points[i].tith, p.points[i].thw_hat};
        }
        const auto ref = oracle::plane(pts);
        CHECK(p.alpha == doctest::Approx(ref[0]).epsilon(1e-9));
        CHECK(p.beta == doctest::Approx(ref[1]).epsilon(1e-9));
        CHECK(p.gamma == doctest::Approx(ref[2]).epsilon(1e-9));
    }
    CHECK(fitted > 400);
}

TEST_CASE("degenerate and non-monotone planes are rejected") {
    CHECK_THROWS_AS(fit_plane(stats_of(1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0)), NumericError);
    CHECK_THROWS_AS(fit_plane(stats_of(2.0, 0.3, 1.5, 3.0, 0.0, 0.0, 0.0)), NumericError);
    // mean TITH below the chord makes alpha negative for these constants
    const auto s = stats_of(1.08, 0.27, 0.6, 1.5, 0.0, 0.2, 1.0);
    CHECK_THROWS_AS(fit_plane(s), NumericError);
    CHECK_NOTHROW(fit_plane(s, false));
    const auto ok = fit_plane(stats_of(1.08, 0.27, 0.6, 1.5, 0.0, 0.6, 1.0));
    CHECK(ok.alpha > 0.0);
    CHECK(ok.beta <= 0.0);
    CHECK(ok.fitted);
}

TEST_CASE("constant fallback plane") {
    const auto s = stats_of(2.4, 0.3, 1.5, 3.0, 0.0, 0.0, 0.0);
    const auto p = constant_plane(s, "collinear");
    CHECK(p.alpha == 0.0);
    CHECK(p.beta == 0.0);
    CHECK(p.gamma == 2.4);
    CHECK_FALSE(p.fitted);
    CHECK(p.note == "collinear");
    CHECK(personalize(p, {2.0, 0.3}) == 2.4);
}

TEST_CASE("personalize saturates at the floor") {
    const auto p = fit_plane(stats_of(1.08, 0.27, 0.6, 1.5, 0.0, 0.6, 1.0));
    CHECK(p.raw(0.6, 1.0) == doctest::Approx(0.81));
    CHECK(personalize(p, {0.6, 1.0}) == 1.0);
    CHECK(personalize(p, {1.08, 0.6}) == doctest::Approx(1.08).epsilon(1e-12));
    for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 100; ++j) {
            const Observation o{0.3 + 0.03 * i, 0.01 * j};
            const double y = personalize(p, o);
            CHECK(y == std::max(p.raw(o.thw_rms_bar, o.tith_norm), 1.0));
        }
    }
    CHECK_THROWS_AS(personalize(p, {0.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(personalize(p, {1.0, 1.5}), ValidationError);
}

TEST_CASE("learning window averages") {
    const Scaler sc{{0, 0, 0}, {4, 60, 40}};
    const std::vector<FeatureVector> one{{1.2, 30, 10, 40}};
    auto o = learning_window(one, sc);
    CHECK(o.thw_rms_bar == 1.2);
    CHECK(o.tith_norm == 0.25);
    const std::vector<FeatureVector> two{{1.0, 0, 0, 40}, {2.0, 0, 20, 40}};
    o = learning_window(two, sc);
    CHECK(o.thw_rms_bar == 1.5);
    CHECK(o.tith_norm == 0.25);
    CHECK_THROWS_AS(learning_window(std::vector<FeatureVector>{}, sc), ValidationError);
}

TEST_CASE("setpoint line protocol") {
    CHECK(setpoint_line(1.2345, 0, 12.34) == "SETPOINT thw_s=1.234 cluster=1 ts=12.3\n");
    CHECK(setpoint_line(2.0, 2, 100.0) == "SETPOINT thw_s=2.000 cluster=3 ts=100.0\n");
}
