#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "owl/sdi_codec.hpp"

namespace owl {

enum class Unit : std::uint32_t { volts = 0, amperes = 1, watts = 2 };

std::string_view unit_name(Unit u);

inline constexpr double kDefaultSampleRate = 32e9;

/// Uniformly sampled real signal. Sample n sits at t0 + n / sample_rate.
struct Waveform {
    std::vector<double> samples;
    double sample_rate = kDefaultSampleRate;
    double t0 = 0.0;
    Unit unit = Unit::volts;

    std::size_t size() const noexcept { return samples.size(); }
    double period() const noexcept { return 1.0 / sample_rate; }
    double time_at(std::size_t n) const noexcept { return t0 + static_cast<double>(n) / sample_rate; }
    double duration() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }

    /// Throws std::invalid_argument if the type invariants do not hold.
    void validate() const;
};

/// NRZ pulse shape. Edge times are 20%-80% of the swing.
struct PulseSpec {
    double ui = 1.0 / sdi_rate::g3;
    double vpp = 0.8;
    double dc_offset = 0.0;
    double t_rise = 100e-12;
    double t_fall = 100e-12;
    double overshoot_frac = 0.0;

    /// A clean 3G-SDI source: 800 mV, no offset, 100 ps edges.
    static PulseSpec sdi_3g();
    static PulseSpec for_rate(double bit_rate);

    void validate() const;
};

/// Level L maps to dc_offset + L * vpp / 2. Transitions are raised-cosine
/// edges centred on UI boundaries; with overshoot_frac > 0 each edge is
/// followed by one damped-sine lobe of height overshoot_frac * vpp / 2.
/// Level k occupies [t_offset + k ui, t_offset + (k+1) ui); the record spans
/// round(N ui fs) samples from t = 0 and holds the end levels outside.
Waveform synthesize(std::span<const std::int8_t> levels, const PulseSpec& spec,
                    double sample_rate = kDefaultSampleRate, double t_offset = 0.0);

Waveform add_dc_bias(const Waveform& w, double v_dc);
Waveform scale(const Waveform& w, double gain);
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

/// Band-limited (Kaiser-windowed sinc) resampling over the same time span.
Waveform resample(const Waveform& w, double new_rate);

/// y(t) = w(t - delay) on the same sample grid. Samples before the signal
/// arrives hold the first input value.
Waveform delay(const Waveform& w, double delay_s);

/// Samples with time in [t_begin, t_end).
Waveform slice(const Waveform& w, double t_begin, double t_end);

double mean(const Waveform& w);

/// OWLWAV1 binary format.
void write_waveform(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform(const std::filesystem::path& path);

/// CSV with header "t_seconds,value".
void write_waveform_csv(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform_csv(const std::filesystem::path& path, Unit unit = Unit::volts);

}  // namespace owl
