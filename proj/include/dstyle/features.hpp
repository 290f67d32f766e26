#pragma once

#include <array>
#include <span>

#include "dstyle/segmentation.hpp"
#include "dstyle/trip.hpp"

namespace dstyle {

/// Feature triple in (THW_RMS, TETH, TITH) order.
using Vec3 = std::array<double, 3>;

enum FeatureIndex : std::size_t { kThwRms = 0, kTeth = 1, kTith = 2 };

struct SafetyThreshold {
    double thw_star{1.5};  // s
};

struct FeatureVector {
    double thw_rms{0.0};   // s
    double teth{0.0};      // s
    double tith{0.0};      // s*s
    double duration{0.0};  // s

    Vec3 values() const { return {thw_rms, teth, tith}; }
};

/// Time headway d / v. Throws UndefinedFeatureError without a lead or at v <= 0.
double thw(const TripSample& s);

/// Inverse time-to-collision v_r / d. Throws UndefinedFeatureError at d <= 0.
double ttci(const TripSample& s);

// The segment-level features skip bridged samples. Every other sample must
// have a defined THW; otherwise UndefinedFeatureError is thrown, as it is when
// no valid sample remains.

/// sqrt(mean THW^2).
double thw_rms(const Stretch& segment);

/// Time exposed to 0 <= THW <= THW*: count of such samples times the period.
double teth(const Stretch& segment, SafetyThreshold thr = {});

/// Time-integrated deficit: sum of (THW* - THW) * period over the same samples.
double tith(const Stretch& segment, SafetyThreshold thr = {});

FeatureVector featurize(const Stretch& segment, SafetyThreshold thr = {});

/// Per-feature min-max normalization fitted on a training cohort.
struct Scaler {
    Vec3 mins{};
    Vec3 maxs{};
};

/// Throws ValidationError when a feature has max == min (or no vectors).
Scaler fit_scaler(std::span<const FeatureVector> vectors);

/// Maps training min to 0 and max to 1, clamping outside values into [0, 1].
Vec3 apply_scaler(const Scaler& scaler, const Vec3& raw);
inline Vec3 apply_scaler(const Scaler& scaler, const FeatureVector& fv) {
    return apply_scaler(scaler, fv.values());
}

/// Normalizes a single feature component.
double apply_scaler(const Scaler& scaler, FeatureIndex which, double raw);

}  // namespace dstyle
