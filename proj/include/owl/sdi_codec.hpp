#pragma once

// SDI channel-coding layer: PRBS test sources, the x^9 + x^4 + 1
// self-synchronizing scrambler, NRZI, and video line timing.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace owl {

/// Standard SDI serial rates in bits/s.
namespace sdi_rate {
inline constexpr double sd = 270e6;
inline constexpr double hd = 1.485e9;
inline constexpr double g3 = 2.97e9;
inline constexpr double g6 = 5.94e9;
inline constexpr double g12 = 11.88e9;
inline constexpr double g24 = 23.76e9;
}  // namespace sdi_rate

/// Flat bit sequence (one byte per bit, values 0/1) with its bit rate.
struct BitStream {
    std::vector<std::uint8_t> bits;
    double bit_rate = sdi_rate::g3;

    std::size_t size() const noexcept { return bits.size(); }
    bool empty() const noexcept { return bits.empty(); }
    bool is_standard_rate() const noexcept;
};

/// NRZ line levels, each -1 or +1.
using Levels = std::vector<std::int8_t>;

/// Fibonacci LFSR description. Tap positions are 1-based (tap 15 is the
/// register MSB for a length-15 register).
struct LfsrSpec {
    std::vector<unsigned> taps;
    unsigned length = 15;
    std::uint64_t seed = 0x7fff;

    static LfsrSpec prbs15();  // x^15 + x^14 + 1, seed all-ones
    static LfsrSpec prbs7();   // x^7 + x^6 + 1, seed all-ones
};

struct PrbsResult {
    BitStream stream;
    /// Set when the tap set is not verified maximal.
    std::optional<std::string> warning;
};

/// First n_bits of the register output. The output bit of a state is its MSB;
/// the register then shifts left and feeds back the XOR of the tapped bits.
PrbsResult generate_prbs(const LfsrSpec& spec, std::size_t n_bits, double bit_rate = sdi_rate::g3);

/// Multiplicative scrambler, s[k] = d[k] ^ s[k-4] ^ s[k-9], zero-initialized.
BitStream scramble(const BitStream& in);
/// Inverse of scramble: d[k] = s[k] ^ s[k-4] ^ s[k-9].
BitStream descramble(const BitStream& in);

/// Register-state variants for resuming mid-stream. `state` holds the last
/// nine line bits, bit 0 most recent.
BitStream scramble(const BitStream& in, std::uint16_t& state);
BitStream descramble(const BitStream& in, std::uint16_t& state);

Levels nrzi_encode(const BitStream& in, int initial_level);
BitStream nrzi_decode(std::span<const std::int8_t> levels, int initial_level, double bit_rate = sdi_rate::g3);

struct LineTiming {
    double frame_duration_s;
    double line_duration_s;
};

LineTiming sdi_line_timing(double frame_rate, double lines_per_frame);

/// OWLBITS file: magic, u64 bit count, f64 bit rate, packed LSB-first bytes.
void write_bits(const std::filesystem::path& path, const BitStream& stream);
BitStream read_bits(const std::filesystem::path& path);

std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes, std::size_t n_bits);

}  // namespace owl
