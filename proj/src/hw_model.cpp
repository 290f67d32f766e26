#include "dstyle/hw_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dstyle/errors.hpp"

namespace dstyle {

namespace {

__extension__ using i128 = __int128;
__extension__ using u128 = unsigned __int128;

constexpr std::uint32_t kLutOne = 0xFFFF;

bool fits_wide(const QFormat& q, i128 raw) {
    return raw >= static_cast<i128>(q.min_raw()) && raw <= static_cast<i128>(q.max_raw());
}

}  // namespace

std::int64_t QFormat::max_raw() const {
    if (is_signed) return (total_bits >= 64) ? std::numeric_limits<std::int64_t>::max()
                                             : (std::int64_t{1} << (total_bits - 1)) - 1;
    return (total_bits >= 63) ? std::numeric_limits<std::int64_t>::max()
                              : (std::int64_t{1} << total_bits) - 1;
}

std::int64_t QFormat::min_raw() const {
    if (!is_signed) return 0;
    return (total_bits >= 64) ? std::numeric_limits<std::int64_t>::min() : -(std::int64_t{1} << (total_bits - 1));
}

double QFormat::lsb() const { return std::ldexp(1.0, -frac_bits); }

void validate(const QFormat& q) {
    if (!(q.frac_bits > 0 && q.frac_bits <= q.total_bits && q.total_bits <= 64)) {
        throw ValidationError("QFormat: require 0 < frac_bits <= total_bits <= 64");
    }
}

std::uint8_t encode_input(double x) {
    const double scaled = std::round(std::clamp(x, 0.0, 1.0) * 256.0);
    return static_cast<std::uint8_t>(std::min(scaled, 255.0));
}

HwInput encode_inputs(const Vec3& x) { return {encode_input(x[0]), encode_input(x[1]), encode_input(x[2])}; }

Vec3 decode_inputs(const HwInput& code) {
    return {decode_input(code[0]), decode_input(code[1]), decode_input(code[2])};
}

MfLut build_lut(const BellMF& mf) {
    MfLut lut{};
    for (std::size_t i = 0; i < kLutSize; ++i) {
        const double v = std::round(mf_eval(mf, static_cast<double>(i) / 256.0) * 65536.0);
        lut[i] = static_cast<std::uint16_t>(std::min(v, static_cast<double>(kLutOne)));
    }
    return lut;
}

HwAnfis quantize_model(const AnfisModel& model) {
    HwAnfis hw;
    for (std::size_t i = 0; i < kAnfisInputs; ++i) {
        for (std::size_t l = 0; l < kAnfisLabels; ++l) hw.luts[3 * i + l] = build_lut(model.mfs[i][l]);
    }
    std::string overflow;
    const auto& fmt = qformat::kConsequent;
    for (std::size_t j = 0; j < kAnfisRules; ++j) {
        const double raw = std::round(std::ldexp(model.consequents[j], fmt.frac_bits));
        if (!(raw >= static_cast<double>(fmt.min_raw()) && raw <= static_cast<double>(fmt.max_raw()))) {
            if (!overflow.empty()) overflow += ", ";
            overflow += "rule " + std::to_string(j + 1) + " (c=" + std::to_string(model.consequents[j]) + ")";
            continue;
        }
        hw.consequents[j] = static_cast<std::int16_t>(raw);
    }
    if (!overflow.empty()) throw QuantizationError("consequent overflow in S1.14: " + overflow);
    return hw;
}

int sop_latency(std::size_t k) {
    if (k == 0) throw ValidationError("sum_of_products: k must be >= 1");
    return static_cast<int>(std::bit_width(k - 1)) + 2;
}

SopResult sum_of_products(std::span<const std::int64_t> u, std::span<const std::int64_t> v, const SopConfig& cfg) {
    if (u.size() != v.size()) throw ValidationError("sum_of_products: operand lengths differ");
    if (u.empty()) throw ValidationError("sum_of_products: k must be >= 1");
    if (cfg.product_shift < 0 || cfg.product_shift > 62) throw ValidationError("sum_of_products: bad product shift");

    SopResult r;
    std::vector<std::int64_t> reg(u.size());

    // Cycle 1 (is_prod): every register stores its product.
    for (std::size_t j = 0; j < u.size(); ++j) {
        const i128 product = static_cast<i128>(u[j]) * static_cast<i128>(v[j]);
        const i128 stored = product >> cfg.product_shift;  // arithmetic: floor
        if (!fits_wide(cfg.accumulator, stored)) {
            throw QuantizationError("sum_of_products: product " + std::to_string(j) +
                                    " overflows the accumulator at the load cycle");
        }
        reg[j] = static_cast<std::int64_t>(stored);
    }
    r.register0.push_back(reg[0]);

    // Folds: upper half of the live registers onto the lower half.
    std::size_t live = reg.size();
    while (live > 1) {
        const std::size_t half = (live + 1) / 2;
        ++r.folds;
        for (std::size_t i = 0; i + half < live; ++i) {
            const i128 sum = static_cast<i128>(reg[i]) + reg[i + half];
            if (!fits_wide(cfg.accumulator, sum)) {
                throw QuantizationError("sum_of_products: accumulator overflow at fold " + std::to_string(r.folds));
            }
            reg[i] = static_cast<std::int64_t>(sum);
            reg[i + half] = 0;
        }
        live = half;
        r.register0.push_back(reg[0]);
    }

    // Output register cycle.
    r.register0.push_back(reg[0]);
    r.value = reg[0];
    r.latency = r.folds + 2;
    return r;
}

DivResult divide(std::int64_t n, std::uint64_t d) {
    if (d == 0) throw NumericError("divide: zero denominator");
    constexpr int kQuotientFrac = 16;
    const bool negative = n < 0;
    const u128 magnitude = negative ? static_cast<u128>(-static_cast<i128>(n)) : static_cast<u128>(n);
    const u128 dividend = magnitude << kQuotientFrac;

    // Restoring division, one quotient bit per step from the top.
    u128 rem = 0;
    u128 quotient = 0;
    for (int bit = 127; bit >= 0; --bit) {
        rem = (rem << 1) | ((dividend >> bit) & 1u);
        if (rem >= d) {
            rem -= d;
            quotient |= u128{1} << bit;
        }
    }
    const i128 q = negative ? -static_cast<i128>(quotient) : static_cast<i128>(quotient);
    if (!fits_wide(qformat::kOutput, q)) throw QuantizationError("divide: quotient overflows the 32-bit output");
    return {static_cast<std::int32_t>(q), kDividerLatency};
}

namespace {

struct Datapath {
    std::array<std::uint16_t, 9> mu{};
    std::array<std::uint32_t, kAnfisRules> partial{};  // m1*m2
    std::array<std::uint32_t, kAnfisRules> w{};
    SopResult num;
    SopResult den;
    DivResult div;
};

Datapath run_datapath(const HwAnfis& hw, const HwInput& x) {
    Datapath dp;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t l = 0; l < 3; ++l) dp.mu[3 * i + l] = hw.luts[3 * i + l][x[i]];
    }
    std::array<std::int64_t, kAnfisRules> w64{};
    std::array<std::int64_t, kAnfisRules> c64{};
    std::array<std::int64_t, kAnfisRules> ones{};
    for (std::size_t j = 0; j < kAnfisRules; ++j) {
        const auto [i1, i2, i3] = rule_labels(j);
        dp.partial[j] = static_cast<std::uint32_t>(dp.mu[i1]) * dp.mu[3 + i2];
        const std::uint64_t full = static_cast<std::uint64_t>(dp.partial[j]) * dp.mu[6 + i3];
        dp.w[j] = static_cast<std::uint32_t>(full >> 16);
        w64[j] = dp.w[j];
        c64[j] = hw.consequents[j];
        ones[j] = 1;
    }
    dp.num = sum_of_products(w64, c64, {qformat::kNumerator, qformat::kConsequent.frac_bits});
    dp.den = sum_of_products(w64, ones, {qformat::kDenominator, 0});
    if (dp.den.value <= 0) throw NumericError("hw_infer: no rule fired (D quantized to zero)");
    dp.div = divide(dp.num.value, static_cast<std::uint64_t>(dp.den.value));
    return dp;
}

}  // namespace

HwResult hw_infer(const HwAnfis& hw, const HwInput& x) {
    const auto dp = run_datapath(hw, x);
    HwResult r;
    r.y_q = dp.div.quotient;
    r.report.sum_of_products = dp.num.latency;
    r.report.divider = dp.div.latency;
    r.strengths = dp.w;
    r.numerator = dp.num.value;
    r.denominator = static_cast<std::uint64_t>(dp.den.value);
    return r;
}

const char* stage_name(HwStage s) {
    switch (s) {
        case HwStage::kReset: return "reset";
        case HwStage::kMfLookup: return "mf_lookup";
        case HwStage::kRuleProduct: return "rule_product";
        case HwStage::kSumOfProducts: return "sum_of_products";
        case HwStage::kDivide: return "divide";
        case HwStage::kOutput: return "output";
    }
    return "?";
}

std::string signal_names(std::uint8_t signals) {
    static constexpr std::pair<std::uint8_t, const char*> names[] = {
        {kSigRst, "rst"}, {kSigCeMult, "CE_mult"}, {kSigCe, "CE"},
        {kSigIsProd, "is_prod"}, {kSigCeDiv, "CE_div"}, {kSigValid, "valid"}};
    std::string out;
    for (const auto& [bit, name] : names) {
        if (!(signals & bit)) continue;
        if (!out.empty()) out += '|';
        out += name;
    }
    return out.empty() ? "none" : out;
}

ControlTrace run_control_sequence(const HwAnfis& hw, const HwInput& x) {
    const auto dp = run_datapath(hw, x);
    ControlTrace tr;
    tr.y_q = dp.div.quotient;
    tr.report.sum_of_products = dp.num.latency;
    tr.report.divider = dp.div.latency;

    auto& e = tr.entries;
    e.push_back({0, kSigRst, HwStage::kReset, 0});
    const std::uint64_t packed_mu = (std::uint64_t{dp.mu[0]} << 32) | (std::uint64_t{dp.mu[3]} << 16) | dp.mu[6];
    e.push_back({1, 0, HwStage::kMfLookup, packed_mu});
    e.push_back({2, kSigCeMult, HwStage::kRuleProduct, dp.partial[0]});
    e.push_back({3, kSigCeMult, HwStage::kRuleProduct, dp.w[0]});

    int cycle = 4;
    for (std::size_t s = 0; s < dp.num.register0.size(); ++s, ++cycle) {
        const std::uint8_t sig = s == 0 ? (kSigCe | kSigIsProd) : kSigCe;
        e.push_back({cycle, sig, HwStage::kSumOfProducts, static_cast<std::uint64_t>(dp.num.register0[s])});
    }
    for (int k = 0; k < dp.div.latency; ++k, ++cycle) {
        const bool last = k + 1 == dp.div.latency;
        std::uint64_t value = 0;
        if (k == 0) value = static_cast<std::uint64_t>(dp.den.value);
        if (last) value = static_cast<std::uint32_t>(dp.div.quotient);
        e.push_back({cycle, static_cast<std::uint8_t>(kSigCeDiv | (last ? kSigValid : 0)),
                     last ? HwStage::kOutput : HwStage::kDivide, value});
    }
    return tr;
}

std::string trace_csv(const ControlTrace& trace) {
    std::string out = "cycle,signal,stage,value_hex\n";
    char buf[32];
    for (const auto& t : trace.entries) {
        std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(t.value));
        out += std::to_string(t.cycle) + ',' + signal_names(t.signals) + ',' + stage_name(t.stage) + ',' + buf + '\n';
    }
    return out;
}

HwBankResult bank_infer(const std::array<HwAnfis, 3>& bank, const HwInput& x) {
    HwBankResult r;
    for (std::size_t s = 0; s < 3; ++s) {
        const auto one = hw_infer(bank[s], x);
        r.y_q[s] = one.y_q;
        if (one.report.total() > r.report.total()) r.report = one.report;
    }
    r.style = 0;
    for (int s = 1; s < 3; ++s) {
        if (r.y_q[static_cast<std::size_t>(s)] > r.y_q[static_cast<std::size_t>(r.style)]) r.style = s;
    }
    return r;
}

QuantizationReport quantization_report(const AnfisModel& model, const HwAnfis& hw) {
    QuantizationReport rep;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t l = 0; l < 3; ++l) {
            const auto& lut = hw.luts[3 * i + l];
            for (std::size_t x = 0; x < kLutSize; ++x) {
                const double exact = mf_eval(model.mfs[i][l], static_cast<double>(x) / 256.0);
                const double err = std::abs(static_cast<double>(lut[x]) / 65536.0 - exact);
                rep.max_lut_error = std::max(rep.max_lut_error, err);
                if (lut[x] == kLutOne && exact * 65536.0 > kLutOne) {
                    ++rep.saturated_entries;
                } else {
                    rep.max_lut_error_lsb = std::max(rep.max_lut_error_lsb, err * 65536.0);
                }
            }
        }
    }
    for (std::size_t j = 0; j < kAnfisRules; ++j) {
        const double q = std::ldexp(static_cast<double>(hw.consequents[j]), -qformat::kConsequent.frac_bits);
        rep.max_consequent_error = std::max(rep.max_consequent_error, std::abs(q - model.consequents[j]));
    }
    return rep;
}

}  // namespace dstyle
