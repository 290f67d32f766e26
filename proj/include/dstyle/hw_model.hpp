#pragma once

// Bit-accurate, cycle-accounted model of the three-input ANFIS accelerator.
//
// Datapath (per accelerator):
//   cycle 1      LUT lookup: 9 memberships, U0.16 (1.0 saturates to 0xFFFF)
//   cycles 2-3   rule products: p = m1*m2 (U0.32), w = (p*m3) >> 16 (U0.32)
//   cycles 4-10  two sum-of-products cores: N = sum (w*c) >> 14 (S.32, 48-bit)
//                and D = sum w (U.32, 40-bit), latency ceil(log2 27) + 2
//   cycles 11-53 divider, y = trunc(N * 2^16 / D) in S15.16 (32-bit)
// The model counts cycles from the schedule; it does not simulate waveforms.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dstyle/anfis.hpp"

namespace dstyle {

struct QFormat {
    int total_bits{0};
    int frac_bits{0};
    bool is_signed{false};

    std::int64_t max_raw() const;
    std::int64_t min_raw() const;
    bool fits(std::int64_t raw) const { return raw >= min_raw() && raw <= max_raw(); }
    double lsb() const;

    friend bool operator==(const QFormat&, const QFormat&) = default;
};

void validate(const QFormat& q);

namespace qformat {
inline constexpr QFormat kInput{8, 8, false};
inline constexpr QFormat kMembership{16, 16, false};
inline constexpr QFormat kConsequent{16, 14, true};
inline constexpr QFormat kRuleProduct{32, 32, false};
inline constexpr QFormat kNumerator{48, 32, true};
inline constexpr QFormat kDenominator{40, 32, false};
inline constexpr QFormat kOutput{32, 16, true};
}  // namespace qformat

/// Stage names in the order the formats are stored in HwAnfis::formats.
inline constexpr std::array<const char*, 7> kFormatNames{
    "input", "membership", "consequent", "rule_product", "numerator", "denominator", "output"};

inline constexpr std::size_t kLutSize = 256;
using MfLut = std::array<std::uint16_t, kLutSize>;
using HwInput = std::array<std::uint8_t, 3>;

struct HwAnfis {
    std::array<MfLut, 9> luts{};                  // index 3*input + label
    std::array<std::int16_t, kAnfisRules> consequents{};
    std::array<QFormat, 7> formats{qformat::kInput,      qformat::kMembership, qformat::kConsequent,
                                   qformat::kRuleProduct, qformat::kNumerator,  qformat::kDenominator,
                                   qformat::kOutput};

    friend bool operator==(const HwAnfis&, const HwAnfis&) = default;
};

/// Normalized input to its 8-bit code: round(x * 256) clamped to [0, 255].
std::uint8_t encode_input(double x);
inline double decode_input(std::uint8_t code) { return static_cast<double>(code) / 256.0; }
HwInput encode_inputs(const Vec3& x);
Vec3 decode_inputs(const HwInput& code);

/// Entry i = round(mf(i / 256) * 2^16), clamped to 0xFFFF.
MfLut build_lut(const BellMF& mf);

/// LUTs for all nine membership functions plus consequents rounded to
/// S1.14. Throws QuantizationError naming every consequent outside
/// [-2, 2 - 2^-14].
HwAnfis quantize_model(const AnfisModel& model);

inline double dequantize_output(std::int32_t y_q) { return static_cast<double>(y_q) / 65536.0; }

inline constexpr int kMfLatency = 1;
inline constexpr int kRuleProductLatency = 2;
inline constexpr int kDividerLatency = 43;

/// ceil(log2 k) + 2 for k >= 1.
int sop_latency(std::size_t k);

struct CycleReport {
    int mf{kMfLatency};
    int rule_product{kRuleProductLatency};
    int sum_of_products{0};
    int divider{kDividerLatency};

    int total() const { return mf + rule_product + sum_of_products + divider; }
    double wall_time_ns(double clock_mhz) const { return 1000.0 * total() / clock_mhz; }

    friend bool operator==(const CycleReport&, const CycleReport&) = default;
};

struct SopConfig {
    QFormat accumulator{qformat::kNumerator};
    int product_shift{0};  // arithmetic right shift applied to each product
};

struct SopResult {
    std::int64_t value{0};
    int latency{0};
    int folds{0};
    std::vector<std::int64_t> register0;  // register 0 at the end of each cycle
};

/// Sum-of-products core: one cycle loads u_j*v_j into k accumulator
/// registers, ceil(log2 k) cycles fold the upper half of the live registers
/// onto the lower half, one cycle presents register 0.
/// Throws QuantizationError when a product or partial sum leaves the
/// accumulator format, naming the cycle.
SopResult sum_of_products(std::span<const std::int64_t> u, std::span<const std::int64_t> v,
                          const SopConfig& cfg = {});

struct DivResult {
    std::int32_t quotient{0};
    int latency{kDividerLatency};
};

/// Fixed-point divide of operands sharing a binary point; the quotient has
/// 16 fractional bits and is truncated toward zero. Bit-serial restoring
/// division. Throws NumericError for d == 0 and QuantizationError when the
/// quotient does not fit the 32-bit output.
DivResult divide(std::int64_t n, std::uint64_t d);

struct HwResult {
    std::int32_t y_q{0};
    CycleReport report{};
    std::array<std::uint32_t, kAnfisRules> strengths{};
    std::int64_t numerator{0};
    std::uint64_t denominator{0};

    double y() const { return dequantize_output(y_q); }
};

/// Throws NumericError when D is zero.
HwResult hw_infer(const HwAnfis& hw, const HwInput& x);

enum Signal : std::uint8_t {
    kSigRst = 1u << 0,
    kSigCeMult = 1u << 1,
    kSigCe = 1u << 2,
    kSigIsProd = 1u << 3,
    kSigCeDiv = 1u << 4,
    kSigValid = 1u << 5,
};

enum class HwStage { kReset, kMfLookup, kRuleProduct, kSumOfProducts, kDivide, kOutput };

const char* stage_name(HwStage s);
/// "rst", "CE|is_prod", ... ; "none" when no signal is asserted.
std::string signal_names(std::uint8_t signals);

struct TraceEntry {
    int cycle{0};
    std::uint8_t signals{0};
    HwStage stage{HwStage::kReset};
    std::uint64_t value{0};  // stage register of interest, two's complement

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct ControlTrace {
    std::vector<TraceEntry> entries;  // cycles 0 .. total, one entry each
    std::int32_t y_q{0};
    CycleReport report{};
};

/// Control-signal schedule: rst at cycle 0, LUT lookup at 1, CE_mult at 2-3,
/// CE with is_prod at 4, CE through the end of the sum-of-products, CE_div
/// for the 43 divider cycles, valid on the last.
ControlTrace run_control_sequence(const HwAnfis& hw, const HwInput& x);

/// CSV `cycle,signal,stage,value_hex`.
std::string trace_csv(const ControlTrace& trace);

struct HwBankResult {
    int style{0};
    std::array<std::int32_t, 3> y_q{};
    CycleReport report{};

    std::array<double, 3> outputs() const {
        return {dequantize_output(y_q[0]), dequantize_output(y_q[1]), dequantize_output(y_q[2])};
    }
};

/// Three accelerators evaluated in parallel; argmax with lowest-index ties.
/// The report is the per-instance maximum since the instances run side by side.
HwBankResult bank_infer(const std::array<HwAnfis, 3>& bank, const HwInput& x);

/// LUT and consequent quantization error against the float model.
struct QuantizationReport {
    double max_lut_error{0.0};          // |LUT/2^16 - mf(i/256)|
    double max_lut_error_lsb{0.0};      // same in LUT LSBs, unclamped entries only
    double max_consequent_error{0.0};
    std::size_t saturated_entries{0};
};

QuantizationReport quantization_report(const AnfisModel& model, const HwAnfis& hw);

// Binary "HWA1" record: magic, 9x256 u16 LUTs, 27 i16 consequents, u8 format
// count, then {u8 total_bits, u8 frac_bits, u8 signed} per format. All
// little-endian. A bank file is consecutive records.
std::vector<std::uint8_t> encode_hwa1(const HwAnfis& hw);
HwAnfis decode_hwa1(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

}  // namespace dstyle
