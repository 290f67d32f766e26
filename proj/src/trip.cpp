#include "dstyle/trip.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dstyle/errors.hpp"
#include "text_util.hpp"

namespace dstyle {

namespace {

constexpr const char* kHeader = "t_s,v_mps,vr_mps,d_m,lead_present,lead_id";

TripSample parse_row(std::string_view line, std::size_t row) {
    const auto fields = split(line, ',');
    if (fields.size() != 6) {
        throw ParseError("trip row " + std::to_string(row) + ": expected 6 fields, got " +
                         std::to_string(fields.size()));
    }
    TripSample s;
    try {
        s.t = parse_double(fields[0]);
        s.v = parse_double(fields[1]);
        s.v_r = parse_double(fields[2]);
        s.d = parse_double(fields[3]);
        const auto present = parse_int(fields[4]);
        if (present != 0 && present != 1) throw ParseError("lead_present must be 0 or 1");
        s.lead_present = present == 1;
        s.lead_id = parse_int(fields[5]);
    } catch (const ParseError& e) {
        throw ParseError("trip row " + std::to_string(row) + ": " + e.what());
    }
    return s;
}

double infer_period(const std::vector<TripSample>& samples) {
    if (samples.size() < 2) return kDefaultSamplePeriod;
    const double raw =
        (samples.back().t - samples.front().t) / static_cast<double>(samples.size() - 1);
    // Snap to nanoseconds so that 0.1 s sampling reads back as exactly 0.1.
    return std::round(raw * 1e9) / 1e9;
}

}  // namespace

void validate(const Trip& trip) {
    if (trip.samples.empty()) throw ValidationError("trip '" + trip.trip_id + "' has no samples");
    if (!(trip.sample_period > 0.0)) throw ValidationError("sample period must be positive");
    const double tol = 0.01 * trip.sample_period;
    for (std::size_t i = 0; i < trip.samples.size(); ++i) {
        const auto& s = trip.samples[i];
        const auto where = "trip '" + trip.trip_id + "' sample " + std::to_string(i);
        if (!std::isfinite(s.t) || !std::isfinite(s.v) || !std::isfinite(s.v_r) ||
            !std::isfinite(s.d)) {
            throw ValidationError(where + ": non-finite value");
        }
        if (s.t < 0.0) throw ValidationError(where + ": negative timestamp");
        if (s.v < 0.0) throw ValidationError(where + ": negative speed");
        if (s.lead_present && !(s.d > 0.0)) {
            throw ValidationError(where + ": lead present with non-positive distance");
        }
        if (i > 0) {
            const double dt = s.t - trip.samples[i - 1].t;
            if (!(dt > 0.0)) throw ValidationError(where + ": timestamps not strictly increasing");
            if (std::abs(dt - trip.sample_period) > tol) {
                throw ValidationError(where + ": time step deviates from sample period by more than 1%");
            }
        }
    }
}

std::string trip_filename(const Trip& trip) { return trip.driver_id + "__" + trip.trip_id + ".csv"; }

Trip load_trip(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trip file " + path.string());

    Trip trip;
    const std::string stem = path.stem().string();
    if (const auto pos = stem.find("__"); pos != std::string::npos) {
        trip.driver_id = stem.substr(0, pos);
        trip.trip_id = stem.substr(pos + 2);
    } else {
        trip.driver_id = stem;
        trip.trip_id = stem;
    }

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    if (trim_cr(line) != kHeader) {
        throw ParseError(path.string() + ": row 0: unexpected header '" + line + "'");
    }
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        const auto view = trim_cr(line);
        if (view.empty()) continue;
        trip.samples.push_back(parse_row(view, row));
    }
    trip.sample_period = infer_period(trip.samples);
    validate(trip);
    return trip;
}

void write_trip(const Trip& trip, const std::filesystem::path& path) {
    validate(trip);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write trip file " + path.string());
    std::string buf;
    buf.reserve(trip.samples.size() * 48 + 64);
    buf += kHeader;
    buf += '\n';
    for (const auto& s : trip.samples) {
        append_double(buf, s.t);
        buf += ',';
        append_double(buf, s.v);
        buf += ',';
        append_double(buf, s.v_r);
        buf += ',';
        append_double(buf, s.d);
        buf += ',';
        buf += s.lead_present ? '1' : '0';
        buf += ',';
        buf += std::to_string(s.lead_id);
        buf += '\n';
    }
    out << buf;
    if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace dstyle
