#include "owl/sdi_codec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace owl {

namespace {

constexpr char kBitsMagic[9] = "OWLBITS";

// Scrambler taps: x^9 + x^4 + 1. History bit (i-1) holds s[k-i].
constexpr unsigned kScrTapA = 4;
constexpr unsigned kScrTapB = 9;
constexpr std::uint16_t kScrMask = 0x1ff;

inline std::uint8_t tap(std::uint16_t state, unsigned delay) {
    return static_cast<std::uint8_t>((state >> (delay - 1)) & 1u);
}

inline std::uint16_t push(std::uint16_t state, std::uint8_t bit) {
    return static_cast<std::uint16_t>(((state << 1) | bit) & kScrMask);
}

void validate(const LfsrSpec& spec) {
    if (spec.length < 1 || spec.length > 63) {
        throw std::invalid_argument("LFSR length must be in [1, 63]");
    }
    if (spec.taps.empty()) throw std::invalid_argument("LFSR needs at least one tap");
    for (unsigned t : spec.taps) {
        if (t < 1 || t > spec.length) throw std::invalid_argument("LFSR tap out of range");
    }
    const std::uint64_t mask = (std::uint64_t{1} << spec.length) - 1;
    if ((spec.seed & mask) == 0) {
        throw std::invalid_argument("LFSR seed must not be all zeros");
    }
}

std::uint64_t tap_mask(const LfsrSpec& spec) {
    std::uint64_t m = 0;
    for (unsigned t : spec.taps) m |= std::uint64_t{1} << (t - 1);
    return m;
}

inline std::uint64_t step(std::uint64_t state, std::uint64_t taps, std::uint64_t mask) {
    const auto fb = static_cast<std::uint64_t>(std::popcount(state & taps) & 1);
    return ((state << 1) | fb) & mask;
}

}  // namespace

bool BitStream::is_standard_rate() const noexcept {
    constexpr std::array rates{sdi_rate::sd, sdi_rate::hd, sdi_rate::g3,
                               sdi_rate::g6, sdi_rate::g12, sdi_rate::g24};
    return std::find(rates.begin(), rates.end(), bit_rate) != rates.end();
}

LfsrSpec LfsrSpec::prbs15() { return {{15, 14}, 15, 0x7fff}; }
LfsrSpec LfsrSpec::prbs7() { return {{7, 6}, 7, 0x7f}; }

PrbsResult generate_prbs(const LfsrSpec& spec, std::size_t n_bits, double bit_rate) {
    validate(spec);
    if (n_bits < 1) throw std::invalid_argument("n_bits must be >= 1");
    if (!(bit_rate > 0)) throw std::invalid_argument("bit_rate must be positive");

    const std::uint64_t mask = (std::uint64_t{1} << spec.length) - 1;
    const std::uint64_t taps = tap_mask(spec);
    const unsigned msb = spec.length - 1;

    PrbsResult result;
    result.stream.bit_rate = bit_rate;
    result.stream.bits.resize(n_bits);
    std::uint64_t state = spec.seed & mask;
    for (std::size_t i = 0; i < n_bits; ++i) {
        result.stream.bits[i] = static_cast<std::uint8_t>((state >> msb) & 1u);
        state = step(state, taps, mask);
    }

    // Walk the full cycle for registers short enough to make that cheap.
    if (spec.length <= 24) {
        const std::uint64_t start = spec.seed & mask;
        std::uint64_t s = step(start, taps, mask);
        std::uint64_t period = 1;
        while (s != start && period <= mask) {
            s = step(s, taps, mask);
            ++period;
        }
        if (period != mask) {
            result.warning = "tap set is not maximal: state cycle length " +
                             (s == start ? std::to_string(period) : std::string("unbounded")) +
                             " != " + std::to_string(mask);
        }
    } else {
        result.warning = "maximality not verified for registers longer than 24 bits";
    }
    return result;
}

BitStream scramble(const BitStream& in, std::uint16_t& state) {
    BitStream out{std::vector<std::uint8_t>(in.size()), in.bit_rate};
    for (std::size_t k = 0; k < in.size(); ++k) {
        const auto s = static_cast<std::uint8_t>((in.bits[k] & 1u) ^ tap(state, kScrTapA) ^ tap(state, kScrTapB));
        out.bits[k] = s;
        state = push(state, s);
    }
    return out;
}

BitStream descramble(const BitStream& in, std::uint16_t& state) {
    BitStream out{std::vector<std::uint8_t>(in.size()), in.bit_rate};
    for (std::size_t k = 0; k < in.size(); ++k) {
        const auto s = static_cast<std::uint8_t>(in.bits[k] & 1u);
        out.bits[k] = static_cast<std::uint8_t>(s ^ tap(state, kScrTapA) ^ tap(state, kScrTapB));
        state = push(state, s);
    }
    return out;
}

BitStream scramble(const BitStream& in) {
    if (in.empty()) throw std::invalid_argument("scramble: empty stream");
    std::uint16_t state = 0;
    return scramble(in, state);
}

BitStream descramble(const BitStream& in) {
    if (in.empty()) throw std::invalid_argument("descramble: empty stream");
    std::uint16_t state = 0;
    return descramble(in, state);
}

Levels nrzi_encode(const BitStream& in, int initial_level) {
    if (in.empty()) throw std::invalid_argument("nrzi_encode: empty stream");
    if (initial_level != 1 && initial_level != -1) {
        throw std::invalid_argument("nrzi_encode: initial level must be +1 or -1");
    }
    Levels out(in.size());
    auto level = static_cast<std::int8_t>(initial_level);
    for (std::size_t k = 0; k < in.size(); ++k) {
        if (in.bits[k] & 1u) level = static_cast<std::int8_t>(-level);
        out[k] = level;
    }
    return out;
}

BitStream nrzi_decode(std::span<const std::int8_t> levels, int initial_level, double bit_rate) {
    if (levels.empty()) throw std::invalid_argument("nrzi_decode: empty level sequence");
    BitStream out{std::vector<std::uint8_t>(levels.size()), bit_rate};
    // Only sign changes matter, so a globally inverted line decodes the same.
    bool prev = initial_level > 0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const bool cur = levels[k] > 0;
        out.bits[k] = static_cast<std::uint8_t>(cur != prev);
        prev = cur;
    }
    return out;
}

LineTiming sdi_line_timing(double frame_rate, double lines_per_frame) {
    if (!(frame_rate > 0)) throw std::invalid_argument("frame_rate must be positive");
    if (!(lines_per_frame >= 1)) throw std::invalid_argument("lines_per_frame must be >= 1");
    const double frame = 1.0 / frame_rate;
    return {frame, frame / lines_per_frame};
}

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] & 1u) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    return bytes;
}

std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes, std::size_t n_bits) {
    if (bytes.size() * 8 < n_bits) throw std::invalid_argument("not enough bytes for bit count");
    std::vector<std::uint8_t> bits(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i) bits[i] = (bytes[i / 8] >> (i % 8)) & 1u;
    return bits;
}

void write_bits(const std::filesystem::path& path, const BitStream& stream) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(kBitsMagic, 8);
    detail::put_le<std::uint64_t>(os, stream.size());
    detail::put_le<double>(os, stream.bit_rate);
    const auto bytes = pack_bits(stream.bits);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

BitStream read_bits(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::invalid_argument("cannot open " + path.string());
    detail::expect_magic(is, kBitsMagic);
    const auto n = detail::get_le<std::uint64_t>(is, "bit count");
    const auto rate = detail::get_le<double>(is, "bit rate");
    if (!(rate > 0)) throw std::invalid_argument("bit file has non-positive bit rate");
    std::vector<std::uint8_t> bytes((n + 7) / 8);
    if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
        throw std::invalid_argument("truncated bit payload in " + path.string());
    }
    return {unpack_bits(bytes, n), rate};
}

}  // namespace owl
