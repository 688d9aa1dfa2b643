#include "owl/budget.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "owl/errors.hpp"

namespace owl {

namespace {

constexpr std::array<SdiVariant, 10> kVariants{{
    {"SD-SDI", "ST 259", 270e6, "SD (480i @ 30 fps)"},
    {"SD-SDI", "ST 259", 270e6, "SD (576i @ 25 fps)"},
    {"HD-SDI", "ST 292", 1.485e9, "HD (720p @ 30 fps)"},
    {"HD-SDI", "ST 292", 1.485e9, "HD (1080i @ 25 fps)"},
    {"3G-SDI", "ST 424", 2.97e9, "FHD (1080p @ 50 fps)"},
    {"3G-SDI", "ST 424", 2.97e9, "FHD (1080p @ 60 fps)"},
    {"6G-SDI", "ST 2081", 5.94e9, "4K UHD (2160p @ 30 fps)"},
    {"12G-SDI", "ST 2082", 11.88e9, "4K UHD (2160p @ 60 fps)"},
    {"24G-SDI", "ST 2083", 23.76e9, "4K UHD (2160p @ 120 fps)"},
    {"24G-SDI", "ST 2083", 23.76e9, "8K UHD (4320p @ 30 fps)"},
}};

// Thresholds are the commonly quoted rounded Q values; 5.7 is slightly
// below the exact inversion of 4.7e-9 (5.74).
const CrashKnee kPerSecond{ErrorTarget::per_second, 5.7, 4.7e-9, 188.0};
const CrashKnee kPerHour{ErrorTarget::per_hour, 7.0, 1.3e-12, 182.0};

template <typename Pred>
VariantInfo collect(Pred match, const std::string& key) {
    VariantInfo info;
    for (const auto& v : kVariants) {
        if (!match(v)) continue;
        if (info.video_formats.empty()) {
            info.name = v.name;
            info.standard = v.standard;
            info.data_rate_bps = v.data_rate_bps;
        }
        info.video_formats.emplace_back(v.video_format);
    }
    if (info.video_formats.empty()) throw NotFound("no SDI variant matches " + key);
    return info;
}

}  // namespace

double min_bandwidth(double bit_rate, double headroom_factor) {
    if (!(bit_rate > 0)) throw std::invalid_argument("bit_rate must be positive");
    if (!(headroom_factor >= 0.5)) throw std::invalid_argument("headroom factor below 0.5 violates Nyquist");
    return headroom_factor * bit_rate;
}

double q_to_ber(double q) {
    if (!(q > 0)) throw std::invalid_argument("Q must be positive");
    // std::erfc evaluates the tail directly; 1 - erf would cancel to zero here.
    return 0.5 * std::erfc(q / std::sqrt(2.0));
}

double ber_to_q(double ber) {
    if (!(ber > 0 && ber < 0.5)) throw std::invalid_argument("BER must be in (0, 0.5)");
    double lo = 1e-12, hi = 40.0;
    while ((hi - lo) > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (q_to_ber(mid) > ber) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double q_to_snr_db(double q) {
    if (!(q > 0)) throw std::invalid_argument("Q must be positive");
    return 20.0 * std::log10(q);
}

const CrashKnee& crash_knee(ErrorTarget target) {
    return target == ErrorTarget::per_second ? kPerSecond : kPerHour;
}

ErrorTarget parse_target(std::string_view name) {
    if (name == "per_second") return ErrorTarget::per_second;
    if (name == "per_hour") return ErrorTarget::per_hour;
    throw std::invalid_argument("unknown error target '" + std::string(name) + "' (per_second|per_hour)");
}

std::string_view target_name(ErrorTarget target) {
    return target == ErrorTarget::per_second ? "per_second" : "per_hour";
}

KneeVerdict crash_knee_check(double measured_q, ErrorTarget target) {
    if (!(measured_q >= 0)) throw std::invalid_argument("measured Q must be >= 0");
    const auto& knee = crash_knee(target);
    KneeVerdict v;
    v.measured_q = measured_q;
    v.threshold_q = knee.q_threshold;
    v.pass = measured_q >= knee.q_threshold;
    v.margin_db = measured_q > 0 ? 20.0 * std::log10(measured_q / knee.q_threshold)
                                 : -std::numeric_limits<double>::infinity();
    v.exact_q = ber_to_q(knee.ber_threshold);
    return v;
}

std::span<const SdiVariant> sdi_variants() { return kVariants; }

VariantInfo variant_lookup(double bit_rate) {
    std::ostringstream key;
    key << bit_rate << " b/s";
    return collect([&](const SdiVariant& v) { return v.data_rate_bps == bit_rate; }, key.str());
}

VariantInfo variant_lookup(std::string_view name) {
    return collect([&](const SdiVariant& v) { return v.name == name; }, std::string(name));
}

void write_variants_csv(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << "variant,standard,data_rate_bps,video_format\n";
    for (const auto& v : kVariants) {
        os << v.name << ',' << v.standard << ',' << std::setprecision(12) << v.data_rate_bps << ",\"" << v.video_format
           << "\"\n";
    }
}

}  // namespace owl
