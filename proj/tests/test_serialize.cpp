#include "doctest.h"
#include "dstyle/errors.hpp"
#include "dstyle/serialize.hpp"
#include "dstyle/random.hpp"
#include "helpers.hpp"

using namespace dstyle;

TEST_CASE("scaler json round trip") {
    const Scaler s{{0.5, 0.0, 0.125}, {3.5, 59.9, 41.0}};
    const auto back = scaler_from_json(Json::parse(to_json(s).dump()));
    CHECK(back.mins == s.mins);
    CHECK(back.maxs == s.maxs);
    CHECK_THROWS_AS(scaler_from_json(Json::parse(R"({"mins":[0,0,0],"maxs":[1,0,1]})")), ValidationError);
    CHECK_THROWS_AS(scaler_from_json(Json::parse(R"({"mins":[0,0]})")), ParseError);
}

TEST_CASE("cluster model json uses 1-based styles") {
    ClusterModel m;
    m.centroids = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}, {0.7, 0.8, 0.9}};
    m.inertia = 1.25;
    m.label_order = {2, 0, 1};
    const auto j = to_json(m, "scaler.json");
    CHECK(j["label_order"] == Json::array({3, 1, 2}));
    CHECK(j["scaler_ref"] == "scaler.json");
    const auto back = cluster_model_from_json(Json::parse(j.dump()));
    CHECK(back.centroids == m.centroids);
    CHECK(back.label_order == m.label_order);
    auto bad = j;
    bad["label_order"] = Json::array({1, 1, 2});
    CHECK_THROWS_AS(cluster_model_from_json(bad), ParseError);
}

TEST_CASE("ANFIS model json round trip") {
    Rng rng(5);
    AnfisModel m = AnfisModel::grid_initialized();
    for (auto& c : m.consequents) c = rng.uniform(-1, 1);
    m.mfs[1][2].a = 0.3141592653589793;
    const auto j = to_json(m, "scaler.json");
    CHECK(j["rule_order"] == "i1-major");
    CHECK(j["inputs"] == 3);
    CHECK(anfis_from_json(Json::parse(j.dump())) == m);
    auto bad = j;
    bad["consequents"].erase(0);
    CHECK_THROWS_AS(anfis_from_json(bad), ParseError);
    bad = j;
    bad["mfs"][0][0]["a"] = -1.0;
    CHECK_THROWS_AS(anfis_from_json(bad), ValidationError);
}

TEST_CASE("plane json round trip") {
    PlaneModel p;
    p.style = 2;
    p.alpha = 0.5;
    p.beta = -0.25;
    p.gamma = 0.75;
    p.points = {PlanePoint{1, 0.5, 1.2}, PlanePoint{2, 0, 1.8}, PlanePoint{1.5, 0.2, 1.5}};
    const auto j = to_json(p);
    CHECK(j["cluster"] == 3);
    CHECK(j["floor_s"] == 1.0);
    const auto back = plane_from_json(Json::parse(j.dump()));
    CHECK(back.style == 2);
    CHECK(back.alpha == 0.5);
    CHECK(back.points[1].thw_hat == 1.8);
}

TEST_CASE("feature table round trip") {
    std::vector<FeatureRow> rows{{"a-t0", 0, {0.1 + 0.2, 38.0, 24.279586634460713, 38.0}, -1},
                                 {"a-t0", 1, {1.5, 0.0, 0.0, 59.9}, -1}};
    const auto text = features_csv(rows);
    CHECK(text.rfind("trip_id,segment_idx,thw_rms,teth,tith,duration_s\n", 0) == 0);
    auto back = parse_features_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].fv.thw_rms == 0.1 + 0.2);
    CHECK(back[0].style == -1);
    rows[0].style = 0;
    rows[1].style = 2;
    back = parse_features_csv(features_csv(rows));
    CHECK(back[1].style == 2);
    CHECK_THROWS_AS(parse_features_csv("x,y\n"), ParseError);
    CHECK_THROWS_AS(parse_features_csv("trip_id,segment_idx,thw_rms,teth,tith,duration_s\na,0,1,2\n"), ParseError);
}

TEST_CASE("segment manifest and materialize") {
    auto trip = testing::steady_trip(800, 20.0, 30.0);
    trip.trip_id = "x-t0";
    trip.driver_id = "x";
    trip.samples[100].lead_present = false;
    const auto st = find_stretches(trip);
    const auto segs = uniformize(st);
    const auto j = segment_manifest(segs);
    REQUIRE(j.size() == segs.size());
    CHECK(j[0]["trip_id"] == "x-t0");
    const auto refs = manifest_from_json(Json::parse(j.dump()));
    const auto rebuilt = materialize(refs[0], trip, Premises{});
    CHECK(rebuilt.samples == segs[0].samples);
    CHECK(rebuilt.bridged == segs[0].bridged);
    auto bad = refs[0];
    bad.end_index = 5000;
    CHECK_THROWS_AS(materialize(bad, trip, Premises{}), ValidationError);
}

TEST_CASE("confusion csv") {
    ConfusionMatrix cm;
    cm.at(0, 0) = 6;
    cm.at(2, 1) = 1;
    CHECK(confusion_csv(cm) ==
          "actual\\identified,cluster1,cluster2,cluster3\n"
          "cluster1,6,0,0\ncluster2,0,0,0\ncluster3,0,1,0\n");
}
