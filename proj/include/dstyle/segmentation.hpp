#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dstyle/trip.hpp"

namespace dstyle {

/// Conditions for steady car-following. Distances in m, speeds in m/s.
struct Premises {
    double max_distance{120.0};
    double min_speed{20.0 / 3.6};
    double max_abs_ttci{0.05};   // 1/s
    double min_duration{30.0};   // s
    int dropout_tolerance{5};    // consecutive non-compliant samples bridged
    double min_distance{1.0};    // below this TTCi is treated as singular
};

void validate(const Premises& p);

/// Contiguous slice of a trip. `bridged[i]` marks tolerated gap samples,
/// which carry no defined headway and are left out of every feature sum.
struct Stretch {
    std::string trip_id;
    std::string driver_id;
    std::size_t start_index{0};  // inclusive, into the source trip
    std::size_t end_index{0};    // inclusive
    double sample_period{kDefaultSamplePeriod};
    std::vector<TripSample> samples;
    std::vector<std::uint8_t> bridged;

    std::size_t size() const { return samples.size(); }
    /// Wall-clock span, bridged gaps included: sample count times period,
    /// snapped to whole nanoseconds so 599 x 0.1 reads as 59.9.
    double duration() const { return std::round(static_cast<double>(samples.size()) * sample_period * 1e9) / 1e9; }
};

/// A uniformized stretch, 30 s <= duration <= 59.9 s.
struct CarFollowingSegment : Stretch {
    double duration_s{0.0};
};

/// Per-sample premise check (lead present, d within [min_distance,
/// max_distance], v >= min_speed, |v_r / d| <= max_abs_ttci). Lead identity is
/// handled by find_stretches.
bool sample_compliant(const TripSample& s, const Premises& p);

/// Maximal runs of compliant samples following one lead, bridging up to
/// `dropout_tolerance` consecutive non-compliant samples. A compliant sample
/// with a different lead id ends the run. Runs shorter than min_duration are
/// dropped. Result is ordered by start_index and non-overlapping.
std::vector<Stretch> find_stretches(const Trip& trip, const Premises& p = {});

/// Splits each stretch into the smallest number n of equal pieces (sizes
/// differ by at most one sample) with duration <= max_duration. When such a
/// split would produce pieces shorter than min_duration, a single piece
/// truncated to max_duration is emitted instead.
/// Throws ValidationError for a stretch shorter than min_duration.
std::vector<CarFollowingSegment> uniformize(std::span<const Stretch> stretches,
                                            double max_duration = 59.9,
                                            double min_duration = 30.0);

/// Keeps the segments whose THW_RMS is <= thw_rms_max.
std::vector<CarFollowingSegment> filter_by_thw_rms(std::span<const CarFollowingSegment> segments,
                                                   double thw_rms_max = 4.5);

}  // namespace dstyle
