#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dstyle {

/// One radar/CAN sample. Speeds in m/s, distance in m, time in s.
struct TripSample {
    double t{0.0};
    double v{0.0};    // host speed
    double v_r{0.0};  // host minus lead; positive when closing
    double d{0.0};    // distance to lead
    bool lead_present{false};
    std::int64_t lead_id{0};

    friend bool operator==(const TripSample&, const TripSample&) = default;
};

inline constexpr double kDefaultSamplePeriod = 0.1;

struct Trip {
    std::string trip_id;
    std::string driver_id;
    double sample_period{kDefaultSamplePeriod};
    std::vector<TripSample> samples;

    double duration() const { return static_cast<double>(samples.size()) * sample_period; }

    friend bool operator==(const Trip&, const Trip&) = default;
};

/// Throws ValidationError when the trip breaks any data invariant:
/// non-empty, t >= 0 and strictly increasing with steps within 1% of the
/// sample period, v >= 0, d > 0 whenever a lead is present.
void validate(const Trip& trip);

/// Canonical file name: "<driver_id>__<trip_id>.csv".
std::string trip_filename(const Trip& trip);

/// Reads a trip CSV (header `t_s,v_mps,vr_mps,d_m,lead_present,lead_id`).
/// Identifiers come from the file stem: "<driver>__<trip>" or, without the
/// separator, the stem is used for both. The sample period is inferred from
/// the timestamps.
Trip load_trip(const std::filesystem::path& path);

/// Writes the trip in the CSV schema using shortest round-trip number
/// formatting, so load_trip(write_trip(t)) reproduces t exactly.
void write_trip(const Trip& trip, const std::filesystem::path& path);

/// Parameters of a synthetic follower.
struct DriverArchetype {
    double target_thw{1.5};        // s
    double thw_jitter_sd{0.0};     // s, stationary sd of the desired-headway wander
    std::uint64_t speed_profile_seed{0};
    double gain{0.5};              // 1/s
};

/// Knobs of the synthetic scenario that are not part of the driver.
struct GeneratorOptions {
    double sample_period{kDefaultSamplePeriod};
    bool constant_lead_speed{false};
    double lead_speed{25.0};           // m/s, used when constant_lead_speed
    double min_lead_speed{15.0};
    double max_lead_speed{35.0};
    double min_hold_s{40.0};           // time a lead speed level is held
    double max_hold_s{120.0};
    double lead_accel{0.3};            // m/s^2 while changing level
    double lead_change_prob{0.15};     // per level change, new lead cuts in
    double dropout_rate_hz{0.02};      // radar dropouts per second
    int max_dropout_samples{3};
    double distance_noise_sd{0.05};    // m
    double jitter_time_constant_s{15.0};
    double initial_gap_factor{1.0};    // initial d as a multiple of target_thw * v
};

/// Simulates a follower behind a lead vehicle with a piecewise-constant
/// speed profile. Follower acceleration is
///   a = gain * (d - thw * v) / thw, clamped to [-3, +2] m/s^2.
/// Deterministic in (archetype, duration, seed, options).
/// Throws ValidationError when duration < 60 s.
Trip generate_trip(const DriverArchetype& archetype, double duration_s, std::uint64_t seed,
                   const GeneratorOptions& options = {});

}  // namespace dstyle
