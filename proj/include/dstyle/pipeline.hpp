#pragma once

// Stage commands behind the dstyle executable. Every stage reads its inputs
// from and writes its artifacts to one output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dstyle/anfis.hpp"
#include "dstyle/clustering.hpp"
#include "dstyle/features.hpp"
#include "dstyle/segmentation.hpp"
#include "dstyle/serialize.hpp"
#include "dstyle/trip.hpp"

namespace dstyle {

struct ArchetypeParams {
    std::string name;
    double target_thw{1.5};
    double thw_jitter_sd{0.1};
    double gain{0.5};
};

struct CohortConfig {
    int drivers_per_archetype{4};
    int trips_per_driver{2};
    double trip_duration_s{600.0};
    double driver_thw_sd{0.06};  // spread of target_thw between drivers of one archetype
    std::vector<ArchetypeParams> archetypes{
        {"aggressive", 0.9, 0.08, 0.5}, {"medium", 1.6, 0.12, 0.5}, {"cautious", 2.6, 0.2, 0.5}};
    GeneratorOptions generator{};
};

struct ArtifactPaths {
    std::string trips{"trips"};
    std::string cohort{"cohort.json"};
    std::string segments{"segments.json"};
    std::string features{"features.csv"};
    std::string scaler{"scaler.json"};
    std::string cluster_model{"cluster_model.json"};
    std::string labeled_features{"labeled_features.csv"};
    std::string planes{"planes.json"};
    std::string bank{"bank.json"};
    std::string confusion{"confusion.csv"};
    std::string train_report{"train_report.json"};
    std::string hw_bank{"hw_bank.hwa"};
    std::string hw_sidecar{"hw_bank.json"};
    std::string quantize_report{"quantize_report.json"};
    std::string hwsim_report{"hwsim_report.json"};
    std::string summary{"summary.json"};
};

struct PipelineConfig {
    std::uint64_t seed{42};
    CohortConfig cohort{};
    Premises premises{};
    double max_segment_s{59.9};
    double min_segment_s{30.0};
    double thw_rms_max{4.5};
    SafetyThreshold threshold{};
    KMeansConfig kmeans{};      // seed is derived from `seed`
    TrainConfig train{};        // split_seed is derived from `seed`
    int hwsim_sweep{10000};
    int window_segments{5};
    bool require_monotone_planes{true};
    ArtifactPaths paths{};
};

/// Fills derived seeds and validates every section.
void finalize(PipelineConfig& cfg);

/// Parses a JSON config; absent keys keep their defaults, unknown keys are
/// rejected. Throws ParseError / ValidationError.
PipelineConfig config_from_json(const Json& j);
PipelineConfig load_config(const std::filesystem::path& path);
Json config_to_json(const PipelineConfig& cfg);

/// FNV-1a 64 over the canonical config JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

/// {config_hash, seed, kmeans_seed, split_seed}
Json provenance(const PipelineConfig& cfg);

struct HwsimOptions {
    std::optional<Vec3> x;         // normalized input; otherwise a random sweep
    int sweep{0};                  // 0 = config default
    bool compare_float{false};
    std::optional<std::filesystem::path> trace;
};

struct PersonalizeOptions {
    std::filesystem::path trip;
    int window{0};                 // 0 = config default
};

struct SetpointResult {
    double thw_s{0.0};
    int style{0};
    double ts{0.0};
    Observation observation{};
    std::string line;
};

// Each command returns a short JSON summary of what it produced.
Json cmd_gen(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
Json cmd_segment(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
Json cmd_features(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
Json cmd_cluster(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
Json cmd_train(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
Json cmd_quantize(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
/// Throws NumericError after writing its report when compare_float finds
/// |hw - float| above 2^-6.
Json cmd_hwsim(const PipelineConfig& cfg, const std::filesystem::path& out_dir, const HwsimOptions& opts);
SetpointResult cmd_personalize(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                               const PersonalizeOptions& opts);
/// All stages in order, then one setpoint per driver from its first trip;
/// writes the summary JSON and returns it.
Json cmd_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

inline constexpr double kHwFloatTolerance = 1.0 / 64.0;
inline constexpr double kNearTieBand = 1.0 / 32.0;

}  // namespace dstyle
