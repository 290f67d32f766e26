#include "dstyle/segmentation.hpp"

#include <cmath>

#include "dstyle/errors.hpp"
#include "dstyle/features.hpp"

namespace dstyle {

namespace {

// Sample counts for durations, tolerant of 59.9 / 0.1 = 598.9999...
std::size_t samples_at_most(double duration, double period) {
    return static_cast<std::size_t>(std::floor(duration / period + 1e-9));
}

std::size_t samples_at_least(double duration, double period) {
    return static_cast<std::size_t>(std::ceil(duration / period - 1e-9));
}

Stretch make_stretch(const Trip& trip, std::size_t first, std::size_t last, const Premises& p) {
    Stretch s;
    s.trip_id = trip.trip_id;
    s.driver_id = trip.driver_id;
    s.start_index = first;
    s.end_index = last;
    s.sample_period = trip.sample_period;
    s.samples.assign(trip.samples.begin() + static_cast<std::ptrdiff_t>(first),
                     trip.samples.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    s.bridged.reserve(s.samples.size());
    for (const auto& sample : s.samples) s.bridged.push_back(sample_compliant(sample, p) ? 0 : 1);
    return s;
}

}  // namespace

void validate(const Premises& p) {
    if (!(p.max_distance > 0.0 && p.min_speed > 0.0 && p.max_abs_ttci > 0.0 && p.min_duration > 0.0 &&
          p.dropout_tolerance > 0 && p.min_distance > 0.0)) {
        throw ValidationError("premises must all be strictly positive");
    }
}

bool sample_compliant(const TripSample& s, const Premises& p) {
    if (!s.lead_present) return false;
    if (!(s.d >= p.min_distance) || s.d > p.max_distance) return false;
    if (!(s.v >= p.min_speed)) return false;
    return std::abs(s.v_r / s.d) <= p.max_abs_ttci;
}

std::vector<Stretch> find_stretches(const Trip& trip, const Premises& p) {
    validate(p);
    const std::size_t min_samples = samples_at_least(p.min_duration, trip.sample_period);
    const auto tolerance = static_cast<std::size_t>(p.dropout_tolerance);

    std::vector<Stretch> out;
    bool in_run = false;
    std::size_t run_start = 0;
    std::size_t last_good = 0;
    std::size_t gap = 0;
    std::int64_t run_lead = 0;

    auto close_run = [&] {
        if (last_good - run_start + 1 >= min_samples) {
            out.push_back(make_stretch(trip, run_start, last_good, p));
        }
        in_run = false;
    };

    for (std::size_t i = 0; i < trip.samples.size(); ++i) {
        const auto& s = trip.samples[i];
        if (sample_compliant(s, p)) {
            if (in_run && s.lead_id != run_lead) close_run();
            if (!in_run) {
                in_run = true;
                run_start = i;
                run_lead = s.lead_id;
            }
            last_good = i;
            gap = 0;
        } else if (in_run) {
            if (++gap > tolerance) close_run();
        }
    }
    if (in_run) close_run();
    return out;
}

std::vector<CarFollowingSegment> uniformize(std::span<const Stretch> stretches, double max_duration,
                                            double min_duration) {
    std::vector<CarFollowingSegment> out;
    for (const auto& st : stretches) {
        const std::size_t n_samples = st.size();
        const std::size_t max_piece = samples_at_most(max_duration, st.sample_period);
        const std::size_t min_piece = samples_at_least(min_duration, st.sample_period);
        if (n_samples < min_piece) {
            throw ValidationError("uniformize: stretch of " + std::to_string(st.duration()) +
                                  " s is shorter than the minimum duration");
        }
        std::size_t pieces = (n_samples + max_piece - 1) / max_piece;
        std::size_t base = n_samples / pieces;
        std::size_t extra = n_samples % pieces;
        if (base < min_piece) {
            pieces = 1;
            base = max_piece;
            extra = 0;
        }

        std::size_t offset = 0;
        for (std::size_t k = 0; k < pieces; ++k) {
            const std::size_t len = base + (k < extra ? 1 : 0);
            CarFollowingSegment seg;
            seg.trip_id = st.trip_id;
            seg.driver_id = st.driver_id;
            seg.sample_period = st.sample_period;
            seg.start_index = st.start_index + offset;
            seg.end_index = seg.start_index + len - 1;
            const auto from = static_cast<std::ptrdiff_t>(offset);
            const auto to = static_cast<std::ptrdiff_t>(offset + len);
            seg.samples.assign(st.samples.begin() + from, st.samples.begin() + to);
            seg.bridged.assign(st.bridged.begin() + from, st.bridged.begin() + to);
            seg.duration_s = seg.duration();
            out.push_back(std::move(seg));
            offset += len;
        }
    }
    return out;
}

std::vector<CarFollowingSegment> filter_by_thw_rms(std::span<const CarFollowingSegment> segments,
                                                   double thw_rms_max) {
    std::vector<CarFollowingSegment> out;
    for (const auto& seg : segments) {
        if (thw_rms(seg) <= thw_rms_max) out.push_back(seg);
    }
    return out;
}

}  // namespace dstyle
