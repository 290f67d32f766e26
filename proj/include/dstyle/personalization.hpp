#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dstyle/features.hpp"

namespace dstyle {

/// Descriptive statistics of one cluster. THW_RMS in seconds, TITH
/// normalized with the training scaler. Population standard deviation.
struct ClusterStats {
    int style{0};
    std::size_t count{0};
    double thw_mean{0.0};
    double thw_sd{0.0};
    double thw_min{0.0};
    double thw_max{0.0};
    double tith_min{0.0};
    double tith_max{0.0};
    double tith_mean{0.0};
};

/// One stats entry per style 0..n_styles-1. `tith_normalized` must already be
/// scaled. Throws ValidationError when a style has no members.
std::vector<ClusterStats> compute_cluster_stats(std::span<const double> thw_rms,
                                                std::span<const double> tith_normalized,
                                                std::span<const int> styles, int n_styles = 3);

/// Point of the (THW_RMS_bar, TITH, THW_hat) space.
struct PlanePoint {
    double thw_rms{0.0};
    double tith{0.0};
    double thw_hat{0.0};
};

inline constexpr double kSetpointFloor = 1.0;  // s

/// THW_hat = alpha * THW_RMS_bar + beta * TITH + gamma, floored.
struct PlaneModel {
    int style{0};
    double alpha{0.0};
    double beta{0.0};
    double gamma{0.0};
    std::array<PlanePoint, 3> points{};
    double floor_s{kSetpointFloor};
    /// False for the constant fallback used when no valid plane exists.
    bool fitted{true};
    std::string note;

    double raw(double thw_rms_bar, double tith) const { return alpha * thw_rms_bar + beta * tith + gamma; }
};

/// The three defining points:
///   (min THW_RMS, max TITH, mean - sd), (max THW_RMS, min TITH, mean + sd),
///   (mean THW_RMS, mean TITH, mean).
std::array<PlanePoint, 3> plane_points(const ClusterStats& stats);

/// Plane through the three points. Throws NumericError when their
/// (THW_RMS, TITH) projections are collinear, and, with require_monotone,
/// when the plane does not rise with THW_RMS (alpha > 0) and fall with TITH
/// (beta <= 0).
PlaneModel fit_plane(const ClusterStats& stats, bool require_monotone = true);

/// Flat plane at the cluster mean, for clusters where fit_plane fails.
PlaneModel constant_plane(const ClusterStats& stats, std::string reason);

/// Measurements of one driver over the learning window.
struct Observation {
    double thw_rms_bar{0.0};  // s
    double tith_norm{0.0};    // [0, 1]
};

/// max(plane(obs), floor). Throws ValidationError for an invalid observation.
double personalize(const PlaneModel& plane, const Observation& obs);

/// Mean THW_RMS of the window and the scaler-normalized mean TITH.
/// Throws ValidationError for an empty window.
Observation learning_window(std::span<const FeatureVector> window, const Scaler& scaler);

/// `SETPOINT thw_s=<float> cluster=<int> ts=<float>\n`, cluster 1-based.
std::string setpoint_line(double thw_s, int style, double ts);

}  // namespace dstyle
