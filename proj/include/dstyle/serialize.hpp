#pragma once

// JSON and CSV forms of the persisted artifacts.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dstyle/anfis.hpp"
#include "dstyle/clustering.hpp"
#include "dstyle/features.hpp"
#include "dstyle/hw_model.hpp"
#include "dstyle/personalization.hpp"
#include "dstyle/segmentation.hpp"

namespace dstyle {

using Json = nlohmann::ordered_json;

Json to_json(const Scaler& s);
Scaler scaler_from_json(const Json& j);

/// {centroids, inertia, label_order (1-based styles), scaler_ref}
Json to_json(const ClusterModel& m, const std::string& scaler_ref);
ClusterModel cluster_model_from_json(const Json& j);

/// {inputs: 3, mfs: [[{a,b,e} x3] x3], consequents: [27], rule_order: "i1-major", scaler_ref}
Json to_json(const AnfisModel& m, const std::string& scaler_ref);
AnfisModel anfis_from_json(const Json& j);

/// {cluster (1-based), alpha, beta, gamma, points, floor_s, fitted, note}
Json to_json(const PlaneModel& p);
PlaneModel plane_from_json(const Json& j);

/// Human-readable mirror of an HWA1 record.
Json to_json(const HwAnfis& hw);

Json to_json(const ConfusionMatrix& cm);
/// Rows are actual styles, first column the row label.
std::string confusion_csv(const ConfusionMatrix& cm);

struct SegmentRef {
    std::string trip_id;
    std::string driver_id;
    std::size_t start_index{0};
    std::size_t end_index{0};
    double duration_s{0.0};
};

/// Array of {trip_id, driver_id, start_index, end_index, duration_s}.
Json segment_manifest(std::span<const CarFollowingSegment> segments);
std::vector<SegmentRef> manifest_from_json(const Json& j);

/// Rebuilds a segment from its source trip; bridged samples are the ones
/// failing the premises.
CarFollowingSegment materialize(const SegmentRef& ref, const Trip& trip, const Premises& premises);

struct FeatureRow {
    std::string trip_id;
    std::size_t segment_idx{0};  // index within the trip
    FeatureVector fv;
    int style{-1};               // 0-based; -1 when unlabeled
};

/// `trip_id,segment_idx,thw_rms,teth,tith,duration_s`, plus `,style` (1-based)
/// when every row is labeled.
std::string features_csv(std::span<const FeatureRow> rows);
std::vector<FeatureRow> parse_features_csv(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace dstyle
