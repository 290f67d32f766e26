#include <fstream>

#include "doctest.h"
#include "dstyle/errors.hpp"
#include "dstyle/features.hpp"
#include "dstyle/trip.hpp"
#include "helpers.hpp"

using namespace dstyle;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

double mean_thw_after(const Trip& trip, double t0) {
    double sum = 0.0;
    int n = 0;
    for (const auto& s : trip.samples) {
        if (s.t < t0 || !s.lead_present) continue;
        sum += thw(s);
        ++n;
    }
    return sum / n;
}

}  // namespace

TEST_CASE("load_trip parses a three-row file") {
    const auto dir = testing::temp_dir("trip_parse");
    const auto path = dir / "drv__trip7.csv";
    write_file(path,
               "t_s,v_mps,vr_mps,d_m,lead_present,lead_id\n"
               "0,20,0.5,30,1,4\n"
               "0.1,20.1,0.4,29.9,1,4\n"
               "0.2,20.2,0,0,0,0\n");
    const auto trip = load_trip(path);
    CHECK(trip.samples.size() == 3);
    CHECK(trip.driver_id == "drv");
    CHECK(trip.trip_id == "trip7");
    CHECK(trip.sample_period == doctest::Approx(0.1));
    CHECK(trip.samples[1].v_r == 0.4);
    CHECK(trip.samples[2].lead_present == false);
    CHECK(trip.samples[0].lead_id == 4);
}

TEST_CASE("load_trip reports the offending row") {
    const auto dir = testing::temp_dir("trip_bad");
    const auto path = dir / "x.csv";
    write_file(path, "t_s,v_mps,vr_mps,d_m,lead_present,lead_id\n0,20,0,30,1,1\n0.1,abc,0,30,1,1\n");
    try {
        (void)load_trip(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    write_file(path, "t,v\n0,1\n");
    CHECK_THROWS_AS(load_trip(path), ParseError);
    write_file(path, "t_s,v_mps,vr_mps,d_m,lead_present,lead_id\n0,20,0,30,2,1\n0.1,20,0,30,1,1\n");
    CHECK_THROWS_AS(load_trip(path), ParseError);
    write_file(path, "t_s,v_mps,vr_mps,d_m,lead_present,lead_id\n0,20,0,30,1,1\n0.1,-20,0,30,1,1\n");
    CHECK_THROWS_AS(load_trip(path), ValidationError);
    CHECK_THROWS_AS(load_trip(dir / "missing.csv"), ParseError);
}

TEST_CASE("validate rejects broken timelines") {
    auto trip = testing::steady_trip(10, 20.0, 30.0);
    CHECK_NOTHROW(validate(trip));
    auto t2 = trip;
    t2.samples[5].t = t2.samples[4].t;
    CHECK_THROWS_AS(validate(t2), ValidationError);
    auto t3 = trip;
    t3.samples[3].d = 0.0;
    CHECK_THROWS_AS(validate(t3), ValidationError);
    auto t4 = trip;
    t4.samples[6].t += 0.05;
    CHECK_THROWS_AS(validate(t4), ValidationError);
    Trip empty;
    CHECK_THROWS_AS(validate(empty), ValidationError);
}

TEST_CASE("write then load is the identity") {
    const auto dir = testing::temp_dir("trip_roundtrip");
    DriverArchetype arch{1.3, 0.1, 5, 0.5};
    auto trip = generate_trip(arch, 120.0, 11);
    trip.trip_id = "a-t0";
    trip.driver_id = "a";
    const auto path = dir / trip_filename(trip);
    write_trip(trip, path);
    const auto back = load_trip(path);
    CHECK(back == trip);
}

TEST_CASE("generator is deterministic and validates its precondition") {
    DriverArchetype arch{1.0, 0.1, 3, 0.5};
    const auto a = generate_trip(arch, 300.0, 7);
    const auto b = generate_trip(arch, 300.0, 7);
    CHECK(a == b);
    CHECK_NOTHROW(validate(a));
    const auto c = generate_trip(arch, 300.0, 8);
    CHECK_FALSE(a == c);
    CHECK_THROWS_AS(generate_trip(arch, 30.0, 7), ValidationError);
    CHECK(a.samples.size() == 3000);
}

TEST_CASE("generator tracks the target headway") {
    GeneratorOptions steady;
    steady.constant_lead_speed = true;
    steady.dropout_rate_hz = 0.0;
    steady.lead_change_prob = 0.0;
    steady.distance_noise_sd = 0.0;
    for (double target : {0.9, 1.6, 2.5}) {
        DriverArchetype arch{target, 0.0, 1, 0.5};
        steady.initial_gap_factor = 1.4;
        const auto trip = generate_trip(arch, 300.0, 3, steady);
        // steady state within 5 % after a minute
        CHECK(std::abs(mean_thw_after(trip, 60.0) - target) < 0.05 * target);
    }
    // with jitter, lead changes and a varying lead: within 15 %
    for (double target : {0.9, 1.6, 2.6}) {
        DriverArchetype arch{target, 0.15, 9, 0.5};
        const auto trip = generate_trip(arch, 600.0, 21);
        CHECK(std::abs(mean_thw_after(trip, 60.0) - target) < 0.15 * target);
    }
}
