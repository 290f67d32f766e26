#include "dstyle/features.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dstyle/errors.hpp"
#include "dstyle/simd/kernels.hpp"

namespace dstyle {

namespace {

simd::HeadwaySums headway_sums(const Stretch& seg, double thw_star) {
    const std::size_t n = seg.samples.size();
    std::vector<double> d(n);
    std::vector<double> v(n);
    std::vector<std::uint8_t> valid(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = seg.samples[i];
        const bool bridged = i < seg.bridged.size() && seg.bridged[i];
        if (!bridged && (!s.lead_present || !(s.v > 0.0))) {
            throw UndefinedFeatureError("segment of trip '" + seg.trip_id + "' sample " +
                                        std::to_string(i) + " has no defined THW");
        }
        d[i] = s.d;
        v[i] = bridged ? 1.0 : s.v;
        valid[i] = bridged ? 0 : 1;
    }
    const auto sums = simd::active_kernels().headway_sums(d.data(), v.data(), valid.data(), n, thw_star);
    if (sums.n_valid == 0) {
        throw UndefinedFeatureError("segment of trip '" + seg.trip_id + "' has no valid samples");
    }
    return sums;
}

}  // namespace

double thw(const TripSample& s) {
    if (!s.lead_present) throw UndefinedFeatureError("THW undefined without a lead vehicle");
    if (!(s.v > 0.0)) throw UndefinedFeatureError("THW undefined at zero host speed");
    return s.d / s.v;
}

double ttci(const TripSample& s) {
    if (!(s.d > 0.0)) throw UndefinedFeatureError("TTCi undefined at non-positive distance");
    return s.v_r / s.d;
}

double thw_rms(const Stretch& segment) {
    const auto sums = headway_sums(segment, 0.0);
    return std::sqrt(sums.sum_sq / static_cast<double>(sums.n_valid));
}

namespace {

void check(SafetyThreshold thr) {
    if (!(thr.thw_star > 0.0)) throw ValidationError("THW* must be positive");
}

}  // namespace

double teth(const Stretch& segment, SafetyThreshold thr) {
    check(thr);
    const auto sums = headway_sums(segment, thr.thw_star);
    return static_cast<double>(sums.n_below) * segment.sample_period;
}

double tith(const Stretch& segment, SafetyThreshold thr) {
    check(thr);
    const auto sums = headway_sums(segment, thr.thw_star);
    return sums.deficit * segment.sample_period;
}

FeatureVector featurize(const Stretch& segment, SafetyThreshold thr) {
    check(thr);
    const auto sums = headway_sums(segment, thr.thw_star);
    FeatureVector fv;
    fv.thw_rms = std::sqrt(sums.sum_sq / static_cast<double>(sums.n_valid));
    fv.teth = static_cast<double>(sums.n_below) * segment.sample_period;
    fv.tith = sums.deficit * segment.sample_period;
    fv.duration = segment.duration();
    return fv;
}

Scaler fit_scaler(std::span<const FeatureVector> vectors) {
    if (vectors.empty()) throw ValidationError("fit_scaler: no feature vectors");
    Scaler sc;
    sc.mins = vectors.front().values();
    sc.maxs = sc.mins;
    for (const auto& fv : vectors) {
        const auto v = fv.values();
        for (std::size_t f = 0; f < 3; ++f) {
            sc.mins[f] = std::min(sc.mins[f], v[f]);
            sc.maxs[f] = std::max(sc.maxs[f], v[f]);
        }
    }
    static constexpr const char* names[] = {"THW_RMS", "TETH", "TITH"};
    for (std::size_t f = 0; f < 3; ++f) {
        if (!(sc.maxs[f] > sc.mins[f])) {
            throw ValidationError(std::string("fit_scaler: feature ") + names[f] +
                                  " is constant over the training set");
        }
    }
    return sc;
}

double apply_scaler(const Scaler& scaler, FeatureIndex which, double raw) {
    const double z = (raw - scaler.mins[which]) / (scaler.maxs[which] - scaler.mins[which]);
    return std::clamp(z, 0.0, 1.0);
}

Vec3 apply_scaler(const Scaler& scaler, const Vec3& raw) {
    return {apply_scaler(scaler, kThwRms, raw[0]), apply_scaler(scaler, kTeth, raw[1]),
            apply_scaler(scaler, kTith, raw[2])};
}

}  // namespace dstyle
