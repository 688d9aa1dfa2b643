#pragma once

// Eye diagrams and the signal-quality metrics derived from them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "owl/sdi_codec.hpp"
#include "owl/waveform.hpp"

namespace owl {

struct EyeOptions {
    int phase_bins = 256;
    int amp_bins = 256;
    /// Absolute time of a decision instant; empty selects the phase with the
    /// largest vertical opening on a 64-point grid.
    std::optional<double> clock_phase_s;
};

/// Two-UI eye. One trace per UI, centred on a decision instant so the eye
/// centre sits at phase = ui. Each trace contributes one sample (the nearest
/// waveform sample) to every phase column.
struct EyeDiagram {
    double ui = 0;
    int phase_bins = 0;
    int amp_bins = 0;
    double amp_min = 0;
    double amp_max = 0;
    double clock_phase_s = 0;
    std::size_t n_traces = 0;
    std::vector<std::uint64_t> hist;  // phase-major: hist[p * amp_bins + a]

    std::uint64_t count(int phase_bin, int amp_bin) const {
        return hist[static_cast<std::size_t>(phase_bin) * static_cast<std::size_t>(amp_bins) +
                    static_cast<std::size_t>(amp_bin)];
    }
    std::uint64_t total() const;
    double amp_bin_width() const { return (amp_max - amp_min) / amp_bins; }
    double amp_center(int a) const { return amp_min + (a + 0.5) * amp_bin_width(); }
    double phase_center(int p) const { return (p + 0.5) * 2.0 * ui / phase_bins; }

    /// Element-wise sum with an eye of identical geometry.
    void merge(const EyeDiagram& other);
};

/// Vertical opening (mu_hi - 3 sd_hi) - (mu_lo + 3 sd_lo) of the samples at
/// t = phase + k ui, split at their mean. 0 when one level is missing.
double vertical_opening_at(const Waveform& w, double ui, double phase_s);

EyeDiagram build_eye(const Waveform& w, double ui, const EyeOptions& opts = {});

struct EyeMetrics {
    double q_factor = 0;
    double snr_db = 0;
    double ber_est = 0.5;
    double v_high_mean = 0;
    double v_low_mean = 0;
    double sigma_high = 0;
    double sigma_low = 0;
    double vertical_opening_v = 0;
    double horizontal_opening_ui = 0;
    double t_rise_s = 0;
    double t_fall_s = 0;
    double overshoot_frac = 0;
};

/// Q = V_s / sigma_n with V_s = (mu_hi - mu_lo) / 2 and
/// sigma_n = (sd_hi + sd_lo) / 2, over the central window_frac of the UI.
/// Throws DegradedSignal when the centre is not bimodal.
EyeMetrics q_factor(const EyeDiagram& eye, double window_frac = 0.2);

struct EdgeTimes {
    double t_rise_s = 0;
    double t_fall_s = 0;
    double overshoot_frac = 0;
    double undershoot_frac = 0;
    double v_high = 0;
    double v_low = 0;
    std::size_t n_rising = 0;
    std::size_t n_falling = 0;

    double vpp() const { return v_high - v_low; }
    double dc_offset() const { return 0.5 * (v_high + v_low); }
};

/// 20%-80% edge times averaged over settled edges (preceded by at least
/// 1.5 UI without a mid-level crossing). Needs 8 of each direction.
EdgeTimes edge_times(const Waveform& w, double ui);

struct MaskRule {
    std::string name;
    double measured;
    double lower;   // -inf when unbounded
    double upper;   // +inf when unbounded
    std::string unit;
    bool pass;
};

struct ComplianceReport {
    std::vector<MaskRule> rules;
    bool all_pass() const;
    const MaskRule& rule(const std::string& name) const;
};

/// 3G-SDI scalar limits.
struct MaskLimits {
    double vpp_min = 0.72;
    double vpp_max = 0.88;
    double t_edge_max = 135e-12;
    double t_edge_mismatch_max = 50e-12;
    double overshoot_max = 0.10;
    double dc_offset_max = 0.5;
};

/// Each rule is evaluated on its own readback. Readbacks are quantized to
/// instrument resolution first (0.1 ps, 0.1 mV, 0.01 %).
ComplianceReport mask_check(const EdgeTimes& readback, const MaskLimits& limits = {});

struct BitErrorCount {
    std::size_t errors = 0;
    double ber = 0;
    long offset = 0;      // rx[k + offset] aligns with tx[k]
    std::size_t overlap = 0;
};

/// Aligns rx to tx over |offset| <= max_offset, then counts mismatches over
/// the overlap. Throws std::invalid_argument when the overlap is < 1000 bits.
BitErrorCount count_bit_errors(const BitStream& tx, const BitStream& rx, std::size_t max_offset = 2048);

void write_eye_csv(const std::filesystem::path& path, const EyeDiagram& eye);
void write_eye_svg(const std::filesystem::path& path, const EyeDiagram& eye, const MaskLimits& limits = {},
                   double dc_offset = 0.0);

}  // namespace owl
