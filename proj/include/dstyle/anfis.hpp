#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dstyle/features.hpp"

namespace dstyle {

inline constexpr std::size_t kAnfisInputs = 3;
inline constexpr std::size_t kAnfisLabels = 3;  // LOW, MEDIUM, HIGH
inline constexpr std::size_t kAnfisRules = 27;

/// Generalized bell: 1 / (1 + |(x - e) / a|^(2b)).
struct BellMF {
    double a{0.25};  // width
    double b{2.0};   // steepness
    double e{0.5};   // center

    friend bool operator==(const BellMF&, const BellMF&) = default;
};

double mf_eval(const BellMF& mf, double x);

/// Label indices of rule j; j = 9*i1 + 3*i2 + i3 (THW_RMS-major).
constexpr std::array<std::size_t, 3> rule_labels(std::size_t j) { return {j / 9, (j / 3) % 3, j % 3}; }
constexpr std::size_t rule_index(std::size_t i1, std::size_t i2, std::size_t i3) { return 9 * i1 + 3 * i2 + i3; }

using MfGrid = std::array<std::array<BellMF, kAnfisLabels>, kAnfisInputs>;  // [input][label]
using RuleVector = std::array<double, kAnfisRules>;

/// Zero-order Takagi-Sugeno model over normalized (THW_RMS, TETH, TITH).
struct AnfisModel {
    MfGrid mfs{};
    RuleVector consequents{};

    /// Centers {0, 0.5, 1}, width 0.25, steepness 2 on every input; zero consequents.
    static AnfisModel grid_initialized();

    friend bool operator==(const AnfisModel&, const AnfisModel&) = default;
};

/// Membership values, index 3*input + label.
std::array<double, 9> memberships(const AnfisModel& model, const Vec3& x);

/// w_j = product of the three memberships selected by rule j.
RuleVector firing_strengths(const AnfisModel& model, const Vec3& x);

inline constexpr double kMinFiringSum = 1e-12;

/// Weighted average of consequents. Throws NumericError when the firing
/// strengths sum to <= kMinFiringSum.
double infer(const AnfisModel& model, const Vec3& x);

/// Batched infer through the active SIMD kernel.
std::vector<double> infer_batch(const AnfisModel& model, std::span<const Vec3> xs);

struct TrainSample {
    Vec3 x{};
    double target{0.0};
};

struct TrainConfig {
    int epochs{60};
    double learning_rate{0.05};
    double train_fraction{0.75};
    std::uint64_t split_seed{0};
    double lse_ridge{1e-8};
    // Box on the consequents during training; the defaults are the range of
    // the accelerator's 16-bit consequent table (S1.14).
    double consequent_min{-2.0};
    double consequent_max{2.0 - 0x1p-14};
};

void validate(const TrainConfig& cfg);

/// Loss minimized by the backward pass: (1 / 2N) * sum (y - target)^2.
double training_loss(const AnfisModel& model, std::span<const TrainSample> data);
double training_rmse(const AnfisModel& model, std::span<const TrainSample> data);

/// d loss / d(a, b, e) for every membership function, stored in BellMF
/// layout (field a holds d/da, and so on).
MfGrid antecedent_gradient(const AnfisModel& model, std::span<const TrainSample> data);

/// Forward-pass least squares: consequents minimizing
/// ||W_norm c - t||^2 + ridge ||c||^2 with the antecedents held fixed.
RuleVector solve_consequents(const AnfisModel& model, std::span<const TrainSample> data, double ridge);

/// Same objective restricted to lo <= c <= hi (bounded-variable least
/// squares). Equals solve_consequents whenever that solution is inside the box.
RuleVector solve_consequents(const AnfisModel& model, std::span<const TrainSample> data, double ridge, double lo,
                             double hi);

struct TrainResult {
    AnfisModel model;
    std::vector<double> rmse_per_epoch;  // measured after each forward pass
};

/// Hybrid learning: each epoch solves the consequents by bounded least squares, then
/// takes one gradient step on (a, log b, e). A step that would raise the loss
/// is retried at half the rate (up to 8 times) and otherwise skipped; widths
/// are clamped to a >= 1e-3. Needs at least 27 samples.
TrainResult train_hybrid(std::span<const TrainSample> data, const TrainConfig& cfg,
                         const AnfisModel& init = AnfisModel::grid_initialized());

/// One model per canonical style plus the scaler that normalizes inputs.
struct ClassifierBank {
    std::array<AnfisModel, 3> models{};
    Scaler scaler{};
};

struct Classification {
    int style{0};                 // 0-based canonical style
    std::array<double, 3> outputs{};
};

/// Argmax over the per-style outputs; ties go to the lowest style.
int argmax_style(const std::array<double, 3>& outputs);
Classification classify(const ClassifierBank& bank, const Vec3& x_normalized);

/// Rows = actual style, columns = identified style.
struct ConfusionMatrix {
    std::size_t k{3};
    std::vector<std::size_t> counts = std::vector<std::size_t>(9, 0);

    std::size_t& at(std::size_t actual, std::size_t identified) { return counts[actual * k + identified]; }
    std::size_t at(std::size_t actual, std::size_t identified) const { return counts[actual * k + identified]; }
    std::size_t total() const;
    std::size_t correct() const;
    double accuracy() const;
    /// Per actual class: diagonal over row sum (recall). NaN for empty rows.
    std::vector<double> per_class_by_row() const;
    /// Per identified class: diagonal over column sum (precision). NaN for empty columns.
    std::vector<double> per_class_by_column() const;
};

struct LabeledVector {
    Vec3 x{};   // normalized
    int style{0};
};

ConfusionMatrix evaluate(const ClassifierBank& bank, std::span<const LabeledVector> test_set);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded split that keeps `train_fraction` of every class (rounded) in the
/// training part, with at least one test sample per class of size >= 2.
Split stratified_split(std::span<const int> labels, double train_fraction, std::uint64_t seed);

/// Trains one model per style on one-vs-rest targets (1 inside the style).
ClassifierBank train_bank(std::span<const LabeledVector> train_set, const Scaler& scaler,
                          const TrainConfig& cfg, std::array<std::vector<double>, 3>* rmse_history = nullptr);

}  // namespace dstyle
