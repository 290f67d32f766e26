#include "doctest.h"
#include "dstyle/errors.hpp"
#include "dstyle/features.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace dstyle;

namespace {

Stretch constant_thw(std::size_t n, double thw_value) {
    Stretch s;
    s.sample_period = 0.1;
    for (std::size_t i = 0; i < n; ++i) s.samples.push_back({0.1 * static_cast<double>(i), 20.0, 0.0, 20.0 * thw_value, true, 1});
    s.bridged.assign(n, 0);
    return s;
}

}  // namespace

TEST_CASE("thw and ttci") {
    TripSample s{0, 20.0, 1.0, 30.0, true, 1};
    CHECK(thw(s) == 1.5);
    CHECK(ttci(s) == 1.0 / 30.0);
    s.v = 0.0;
    CHECK_THROWS_AS(thw(s), UndefinedFeatureError);
    s.v = 20.0;
    s.lead_present = false;
    CHECK_THROWS_AS(thw(s), UndefinedFeatureError);
    s.lead_present = true;
    s.d = 0.0;
    CHECK_THROWS_AS(ttci(s), UndefinedFeatureError);
}

TEST_CASE("analytic case: THW 1.0 s for ten samples") {
    const auto seg = constant_thw(10, 1.0);
    CHECK(thw_rms(seg) == 1.0);
    CHECK(teth(seg) == 1.0);
    CHECK(tith(seg) == 0.5);
    const auto fv = featurize(seg);
    CHECK(fv.duration == 1.0);
}

TEST_CASE("headway above THW* contributes nothing to exposure") {
    const auto seg = constant_thw(50, 2.0);
    CHECK(teth(seg) == 0.0);
    CHECK(tith(seg) == 0.0);
    CHECK(thw_rms(seg) == 2.0);
    // exactly at the threshold counts as exposed with zero deficit
    const auto at = constant_thw(10, 1.5);
    CHECK(teth(at) == doctest::Approx(1.0));
    CHECK(tith(at) == 0.0);
}

TEST_CASE("bridged samples are skipped") {
    auto seg = constant_thw(10, 1.0);
    seg.samples[4] = {0.4, 20.0, 0.0, 0.0, false, 0};
    seg.bridged[4] = 1;
    CHECK(thw_rms(seg) == 1.0);
    CHECK(teth(seg) == doctest::Approx(0.9));
    CHECK(tith(seg) == doctest::Approx(0.45));
    seg.bridged[4] = 0;
    CHECK_THROWS_AS(thw_rms(seg), UndefinedFeatureError);
    Stretch none;
    none.samples.push_back({0, 20.0, 0, 0, false, 0});
    none.bridged.push_back(1);
    CHECK_THROWS_AS(featurize(none), UndefinedFeatureError);
}

TEST_CASE("features match the per-sample oracle") {
    Rng rng(99);
    for (int k = 0; k < 200; ++k) {
        const auto seg = testing::random_segment(rng, 300 + rng.below(300));
        const auto fv = featurize(seg);
        const auto o = oracle::features(seg, 1.5);
        CHECK(fv.thw_rms == doctest::Approx(o.thw_rms).epsilon(1e-12));
        CHECK(fv.teth == doctest::Approx(o.teth).epsilon(1e-12));
        CHECK(fv.tith == doctest::Approx(o.tith).epsilon(1e-12));
    }
}

TEST_CASE("THW* changes the exposure") {
    const auto seg = constant_thw(10, 1.0);
    CHECK(tith(seg, {2.0}) == doctest::Approx(1.0));
    CHECK(teth(seg, {0.5}) == 0.0);
    CHECK_THROWS_AS(teth(seg, {0.0}), ValidationError);
}

TEST_CASE("scaler maps the training range onto [0, 1] and clamps") {
    std::vector<FeatureVector> v{{1.0, 0.0, 0.0, 40}, {3.0, 10.0, 5.0, 40}, {2.0, 5.0, 1.0, 40}};
    const auto sc = fit_scaler(v);
    CHECK(sc.mins == Vec3{1.0, 0.0, 0.0});
    CHECK(sc.maxs == Vec3{3.0, 10.0, 5.0});
    CHECK(apply_scaler(sc, v[2]) == Vec3{0.5, 0.5, 0.2});
    CHECK(apply_scaler(sc, Vec3{0.0, 20.0, 2.5}) == Vec3{0.0, 1.0, 0.5});
    CHECK(apply_scaler(sc, kTith, 5.0) == 1.0);
    v[1].teth = 0.0;
    v[2].teth = 0.0;
    CHECK_THROWS_AS(fit_scaler(v), ValidationError);
    CHECK_THROWS_AS(fit_scaler(std::vector<FeatureVector>{}), ValidationError);
}
