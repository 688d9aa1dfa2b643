#pragma once

// Bandwidth rule, Q/SNR/BER conversions, crash-knee thresholds and the SDI
// variant table.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace owl {

/// B = headroom_factor * bit_rate; factor below 0.5 is sub-Nyquist.
double min_bandwidth(double bit_rate, double headroom_factor);

/// BER = erfc(Q / sqrt(2)) / 2.
double q_to_ber(double q);
/// Inverse of q_to_ber by bisection, 1e-9 relative.
double ber_to_q(double ber);
/// SNR = Q^2, in dB: 20 log10(Q).
double q_to_snr_db(double q);

enum class ErrorTarget { per_second, per_hour };

struct CrashKnee {
    ErrorTarget target;
    double q_threshold;      // rounded value used for verdicts
    double ber_threshold;    // target BER the threshold stands for
    double cable_length_m;   // informational: HD-SDI reach at this target
};

const CrashKnee& crash_knee(ErrorTarget target);
ErrorTarget parse_target(std::string_view name);
std::string_view target_name(ErrorTarget target);

struct KneeVerdict {
    bool pass;
    double measured_q;
    double threshold_q;
    double margin_db;      // 20 log10(measured / threshold)
    double exact_q;        // ber_to_q(target BER), for reference
};

KneeVerdict crash_knee_check(double measured_q, ErrorTarget target);

/// One row of the SMPTE variant table.
struct SdiVariant {
    std::string_view name;
    std::string_view standard;
    double data_rate_bps;
    std::string_view video_format;
};

std::span<const SdiVariant> sdi_variants();

/// All rows sharing one variant name, merged.
struct VariantInfo {
    std::string name;
    std::string standard;
    double data_rate_bps = 0;
    std::vector<std::string> video_formats;
};

/// Exact-match lookup by data rate or by variant name. Throws NotFound.
VariantInfo variant_lookup(double bit_rate);
VariantInfo variant_lookup(std::string_view name);

void write_variants_csv(const std::filesystem::path& path);

}  // namespace owl
