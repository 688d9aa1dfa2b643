#pragma once

// Transmitter -> free space -> receiver chain of the VCSEL link, from the
// SDI source connector to the cable-equalizer output.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "owl/sdi_codec.hpp"
#include "owl/waveform.hpp"

namespace owl {

struct VcselSpec {
    double i_th = 2e-3;
    double i_roll = 30e-3;
    double p_max = 14e-3;
    double slope_w_per_a = 14e-3 / (30e-3 - 2e-3);
    double f3db = 18e9;
    double wavelength_nm = 940.0;
};

struct PhotoreceiverSpec {
    double responsivity_a_per_w = 0.5;
    double tia_gain_v_per_a = 5.0e3;
    double f_low = 10e3;
    double f_high = 2e9;
    bool inverting = true;
    double vpp_max = 2.0;
    /// Start the AC-coupling filter in steady state for the record mean, as
    /// for a link that has been running. false starts from rest.
    bool settled_start = true;
};

/// Equalizer boost is a first-order zero at zero_hz cancelled by a pole at
/// pole_rb_factor * bit rate; no boost when the pole is not above the zero.
struct CeqSpec {
    bool enabled = true;
    double zero_hz = 2e9;
    double pole_rb_factor = 0.7;
    /// Empty means automatic (midpoint of the two histogram modes).
    std::optional<double> slicer_threshold_v;
    double latency_s = 14e-9;
};

/// Calibrated receiver noise of the paper-3g preset, volts per sample at
/// 32 GSa/s (see tools/calibrate_noise.cpp).
inline constexpr double kCalibratedNoiseSigma = 4.569e-3;

struct LinkConfig {
    double pad_loss_db = 5.7;
    double splitter_loss_db = 3.0;
    bool splitter_enabled = false;
    double bt_il_db = 0.5;
    double v_dc = 2.4;
    double i_dc = 8.42e-3;
    double drive_impedance = 50.0;
    VcselSpec vcsel;
    double fs_loss_db = 10.0;
    PhotoreceiverSpec rx;
    double bpi_il_db = 2.0;
    bool bpi_enabled = true;
    double cable_delay_s = 12.18e-9;
    CeqSpec ceq;
    double noise_sigma_v = kCalibratedNoiseSigma;
    std::uint64_t seed = 1;

    /// Values of the built-in paper-3g preset (also the member defaults).
    static LinkConfig default_3g();

    void validate() const;
};

Waveform vcsel_transfer(const Waveform& drive, const LinkConfig& cfg);
Waveform photoreceiver_transfer(const Waveform& light, const LinkConfig& cfg);

struct CeqOutput {
    Levels levels;
    Waveform equalized;
    Waveform reclocked;
    /// Time of the first decision instant; level k is sampled at
    /// sample_phase_s + k * ui.
    double sample_phase_s = 0.0;
    double threshold_v = 0.0;
    double latency_s = 0.0;
};

/// Equalize, recover the sampling phase, slice and reclock. Throws
/// DegradedSignal when the sampled amplitudes are not bimodal.
CeqOutput cable_equalizer(const Waveform& rx, const LinkConfig& cfg, double ui, const PulseSpec& out_pulse = {});

struct ChainStage {
    std::string name;
    Waveform waveform;
};

struct ChainTrace {
    /// Named intermediate waveforms in chain order. When intermediate
    /// retention is off only "source" and "rx_pre_ceq" are kept.
    std::vector<ChainStage> stages;
    Levels tx_levels;
    Levels rx_levels;
    BitStream recovered;
    /// Equalized waveform limited to the payload span, for eye analysis.
    Waveform eye_waveform;
    double sample_phase_s = 0.0;
    double group_delay_s = 0.0;
    double ceq_latency_s = 0.0;
    std::size_t level_offset = 0;
    bool polarity_inverted = false;
    std::size_t bit_errors = 0;
    std::size_t missing_bits = 0;

    const Waveform& stage(const std::string& name) const;
    const Waveform* find_stage(const std::string& name) const;
};

struct ChainOptions {
    bool keep_intermediate = true;
    double sample_rate = kDefaultSampleRate;
    int initial_level = -1;
};

ChainTrace run_chain(const BitStream& bits, const LinkConfig& cfg, const PulseSpec& pulse,
                     const ChainOptions& opts = {});

}  // namespace owl
