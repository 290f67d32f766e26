#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dstyle/random.hpp"
#include "dstyle/segmentation.hpp"

namespace testing {

/// Steady-following trip: constant speed v, constant distance d.
inline dstyle::Trip steady_trip(std::size_t n, double v, double d, double period = 0.1) {
    dstyle::Trip trip;
    trip.trip_id = "t";
    trip.driver_id = "d";
    trip.sample_period = period;
    for (std::size_t i = 0; i < n; ++i) {
        trip.samples.push_back({static_cast<double>(i) * period, v, 0.0, d, true, 1});
    }
    return trip;
}

/// Segment with random headways, a few bridged samples and some THW above THW*.
inline dstyle::Stretch random_segment(dstyle::Rng& rng, std::size_t n) {
    dstyle::Stretch s;
    s.trip_id = "r";
    s.driver_id = "r";
    s.sample_period = 0.1;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = rng.uniform(6.0, 35.0);
        const double thw = rng.uniform(0.2, 3.5);
        const bool gap = rng.bernoulli(0.03) && i > 0;
        dstyle::TripSample smp{static_cast<double>(i) * 0.1, v, rng.uniform(-0.5, 0.5), thw * v, !gap, gap ? 0 : 1};
        if (gap) smp.d = 0.0;
        s.samples.push_back(smp);
        s.bridged.push_back(gap ? 1 : 0);
    }
    s.end_index = n - 1;
    return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
    // per-process, so parallel ctest runs do not share directories
    auto p = std::filesystem::temp_directory_path() / ("dstyle_test_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing
