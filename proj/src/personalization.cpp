#include "dstyle/personalization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dstyle/errors.hpp"

namespace dstyle {

std::vector<ClusterStats> compute_cluster_stats(std::span<const double> thw_rms,
                                                std::span<const double> tith_normalized,
                                                std::span<const int> styles, int n_styles) {
    if (thw_rms.size() != styles.size() || tith_normalized.size() != styles.size()) {
        throw ValidationError("cluster stats: input lengths differ");
    }
    std::vector<ClusterStats> out;
    for (int s = 0; s < n_styles; ++s) {
        ClusterStats st;
        st.style = s;
        double thw_sum = 0.0;
        double tith_sum = 0.0;
        for (std::size_t i = 0; i < styles.size(); ++i) {
            if (styles[i] != s) continue;
            if (st.count == 0) {
                st.thw_min = st.thw_max = thw_rms[i];
                st.tith_min = st.tith_max = tith_normalized[i];
            }
            ++st.count;
            thw_sum += thw_rms[i];
            tith_sum += tith_normalized[i];
            st.thw_min = std::min(st.thw_min, thw_rms[i]);
            st.thw_max = std::max(st.thw_max, thw_rms[i]);
            st.tith_min = std::min(st.tith_min, tith_normalized[i]);
            st.tith_max = std::max(st.tith_max, tith_normalized[i]);
        }
        if (st.count == 0) throw ValidationError("cluster stats: style " + std::to_string(s + 1) + " is empty");
        const double n = static_cast<double>(st.count);
        st.thw_mean = thw_sum / n;
        st.tith_mean = tith_sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < styles.size(); ++i) {
            if (styles[i] == s) ss += (thw_rms[i] - st.thw_mean) * (thw_rms[i] - st.thw_mean);
        }
        st.thw_sd = std::sqrt(ss / n);
        out.push_back(st);
    }
    return out;
}

std::array<PlanePoint, 3> plane_points(const ClusterStats& s) {
    return {PlanePoint{s.thw_min, s.tith_max, s.thw_mean - s.thw_sd},
            PlanePoint{s.thw_max, s.tith_min, s.thw_mean + s.thw_sd},
            PlanePoint{s.thw_mean, s.tith_mean, s.thw_mean}};
}

PlaneModel fit_plane(const ClusterStats& stats, bool require_monotone) {
    const auto p = plane_points(stats);
    // Solve alpha*x + beta*y + gamma = z through p0..p2 via differences from p0.
    const double x1 = p[1].thw_rms - p[0].thw_rms;
    const double y1 = p[1].tith - p[0].tith;
    const double z1 = p[1].thw_hat - p[0].thw_hat;
    const double x2 = p[2].thw_rms - p[0].thw_rms;
    const double y2 = p[2].tith - p[0].tith;
    const double z2 = p[2].thw_hat - p[0].thw_hat;
    const double det = x1 * y2 - x2 * y1;
    const double scale = std::max({std::abs(x1 * y2), std::abs(x2 * y1), 1e-300});
    if (std::abs(det) <= 1e-12 * scale || det == 0.0) {
        throw NumericError("fit_plane: style " + std::to_string(stats.style + 1) +
                           " defining points are collinear in (THW_RMS, TITH)");
    }
    PlaneModel m;
    m.style = stats.style;
    m.points = p;
    m.alpha = (z1 * y2 - z2 * y1) / det;
    m.beta = (x1 * z2 - x2 * z1) / det;
    m.gamma = p[0].thw_hat - m.alpha * p[0].thw_rms - m.beta * p[0].tith;
    if (!std::isfinite(m.alpha) || !std::isfinite(m.beta) || !std::isfinite(m.gamma)) {
        throw NumericError("fit_plane: non-finite coefficients");
    }
    if (require_monotone && !(m.alpha > 0.0 && m.beta <= 0.0)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "fit_plane: style %d plane is not monotone (alpha=%.6g, beta=%.6g)",
                      stats.style + 1, m.alpha, m.beta);
        throw NumericError(buf);
    }
    return m;
}

PlaneModel constant_plane(const ClusterStats& stats, std::string reason) {
    PlaneModel m;
    m.style = stats.style;
    m.points = plane_points(stats);
    m.alpha = 0.0;
    m.beta = 0.0;
    m.gamma = stats.thw_mean;
    m.fitted = false;
    m.note = std::move(reason);
    return m;
}

double personalize(const PlaneModel& plane, const Observation& obs) {
    if (!(obs.thw_rms_bar > 0.0) || !(obs.tith_norm >= 0.0 && obs.tith_norm <= 1.0)) {
        throw ValidationError("personalize: observation out of range");
    }
    return std::max(plane.raw(obs.thw_rms_bar, obs.tith_norm), plane.floor_s);
}

Observation learning_window(std::span<const FeatureVector> window, const Scaler& scaler) {
    if (window.empty()) throw ValidationError("learning window: no segments");
    double thw = 0.0;
    double tith = 0.0;
    for (const auto& fv : window) {
        thw += fv.thw_rms;
        tith += fv.tith;
    }
    const double n = static_cast<double>(window.size());
    return {thw / n, apply_scaler(scaler, kTith, tith / n)};
}

std::string setpoint_line(double thw_s, int style, double ts) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "SETPOINT thw_s=%.3f cluster=%d ts=%.1f\n", thw_s, style + 1, ts);
    return buf;
}

}  // namespace dstyle
