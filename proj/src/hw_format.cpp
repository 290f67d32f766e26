#include <cstring>

#include "dstyle/errors.hpp"
#include "dstyle/hw_model.hpp"

namespace dstyle {

namespace {

constexpr char kMagic[4] = {'H', 'W', 'A', '1'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at) {
    return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

constexpr std::size_t kFixedSize = 4 + 9 * kLutSize * 2 + kAnfisRules * 2 + 1;

}  // namespace

std::vector<std::uint8_t> encode_hwa1(const HwAnfis& hw) {
    std::vector<std::uint8_t> out;
    out.reserve(kFixedSize + 3 * hw.formats.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    for (const auto& lut : hw.luts) {
        for (auto v : lut) put_u16(out, v);
    }
    for (auto c : hw.consequents) put_u16(out, static_cast<std::uint16_t>(c));
    out.push_back(static_cast<std::uint8_t>(hw.formats.size()));
    for (const auto& f : hw.formats) {
        out.push_back(static_cast<std::uint8_t>(f.total_bits));
        out.push_back(static_cast<std::uint8_t>(f.frac_bits));
        out.push_back(f.is_signed ? 1 : 0);
    }
    return out;
}

HwAnfis decode_hwa1(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
    if (bytes.size() < kFixedSize) throw ParseError("HWA1: truncated record");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError("HWA1: bad magic");
    HwAnfis hw;
    std::size_t at = 4;
    for (auto& lut : hw.luts) {
        for (auto& v : lut) {
            v = get_u16(bytes, at);
            at += 2;
        }
    }
    for (auto& c : hw.consequents) {
        c = static_cast<std::int16_t>(get_u16(bytes, at));
        at += 2;
    }
    const std::size_t count = bytes[at++];
    if (count != hw.formats.size()) throw ParseError("HWA1: expected 7 format descriptors, got " + std::to_string(count));
    if (bytes.size() < at + 3 * count) throw ParseError("HWA1: truncated format descriptors");
    for (auto& f : hw.formats) {
        f.total_bits = bytes[at];
        f.frac_bits = bytes[at + 1];
        if (bytes[at + 2] > 1) throw ParseError("HWA1: bad signedness flag");
        f.is_signed = bytes[at + 2] == 1;
        at += 3;
        try {
            validate(f);
        } catch (const ValidationError& e) {
            throw ParseError(std::string("HWA1: ") + e.what());
        }
    }
    const HwAnfis reference;
    if (hw.formats != reference.formats) {
        throw ParseError("HWA1: format descriptors differ from the datapath this emulator implements");
    }
    if (consumed) *consumed = at;
    return hw;
}

}  // namespace dstyle
