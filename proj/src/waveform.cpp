#include "owl/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "owl/dsp.hpp"

namespace owl {

namespace {

constexpr char kWavMagic[9] = "OWLWAV1";
constexpr double kPi = std::numbers::pi;

// Full raised-cosine duration whose 20%-80% span equals t2080.
double edge_span(double t2080) {
    const double u20 = std::acos(0.6) / kPi;
    return t2080 / (1.0 - 2.0 * u20);
}

// Single damped-sine lobe normalized to unit peak over [0, width).
struct RingLobe {
    double width;
    double decay;
    double peak;

    explicit RingLobe(double w) : width(w), decay(w) {
        const double t_peak = std::atan(kPi * decay / width) * width / kPi;
        peak = raw(t_peak);
    }
    double raw(double t) const { return std::exp(-t / decay) * std::sin(kPi * t / width); }
    double operator()(double t) const { return (t < 0 || t >= width) ? 0.0 : raw(t) / peak; }
};

}  // namespace

std::string_view unit_name(Unit u) {
    switch (u) {
    case Unit::volts: return "V";
    case Unit::amperes: return "A";
    case Unit::watts: return "W";
    }
    return "?";
}

void Waveform::validate() const {
    if (!(sample_rate > 0)) throw std::invalid_argument("waveform sample_rate must be positive");
    if (samples.empty()) throw std::invalid_argument("waveform has no samples");
    if (unit == Unit::watts) {
        for (double s : samples) {
            if (s < 0) throw std::invalid_argument("optical waveform has negative power");
        }
    }
}

PulseSpec PulseSpec::sdi_3g() { return PulseSpec{}; }

PulseSpec PulseSpec::for_rate(double bit_rate) {
    if (!(bit_rate > 0)) throw std::invalid_argument("bit rate must be positive");
    PulseSpec p;
    p.ui = 1.0 / bit_rate;
    // Keep the edges inside the UI at higher rates.
    p.t_rise = std::min(p.t_rise, 0.3 * p.ui);
    p.t_fall = std::min(p.t_fall, 0.3 * p.ui);
    return p;
}

void PulseSpec::validate() const {
    if (!(ui > 0)) throw std::invalid_argument("pulse ui must be positive");
    if (!(vpp > 0)) throw std::invalid_argument("pulse vpp must be positive");
    if (!(t_rise >= 0 && t_rise < ui)) throw std::invalid_argument("pulse t_rise must be in [0, ui)");
    if (!(t_fall >= 0 && t_fall < ui)) throw std::invalid_argument("pulse t_fall must be in [0, ui)");
    if (!(overshoot_frac >= 0)) throw std::invalid_argument("pulse overshoot_frac must be >= 0");
}

Waveform synthesize(std::span<const std::int8_t> levels, const PulseSpec& spec, double sample_rate,
                    double t_offset) {
    spec.validate();
    if (levels.empty()) throw std::invalid_argument("synthesize: no levels");
    if (!(sample_rate * spec.ui >= 4.0)) {
        throw std::invalid_argument("synthesize: sample rate gives fewer than 4 samples per UI");
    }

    const auto n_levels = static_cast<std::ptrdiff_t>(levels.size());
    const auto n_samples = static_cast<std::size_t>(std::llround(static_cast<double>(levels.size()) * spec.ui * sample_rate));
    const double half_swing = spec.vpp / 2.0;
    const double span_r = edge_span(spec.t_rise);
    const double span_f = edge_span(spec.t_fall);
    const RingLobe ring(spec.ui / 2.0);
    const bool ringing = spec.overshoot_frac > 0.0;

    Waveform w;
    w.sample_rate = sample_rate;
    w.unit = Unit::volts;
    w.samples.resize(std::max<std::size_t>(n_samples, 1));

    for (std::size_t n = 0; n < w.samples.size(); ++n) {
        const double u = static_cast<double>(n) / sample_rate - t_offset;
        const auto m = static_cast<std::ptrdiff_t>(std::floor(u / spec.ui));
        double level = levels[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(m, 0, n_levels - 1))];

        const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(1, m - 2);
        const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(n_levels - 1, m + 2);
        for (std::ptrdiff_t j = j_lo; j <= j_hi; ++j) {
            const double d = levels[static_cast<std::size_t>(j)] - levels[static_cast<std::size_t>(j - 1)];
            if (d == 0.0) continue;
            const double tau = u - static_cast<double>(j) * spec.ui;
            const double span = d > 0 ? span_r : span_f;
            const double half = span / 2.0;
            if (tau > -half && tau < half) {
                const double s = 0.5 * (1.0 - std::cos(kPi * (tau + half) / span));
                level += d * (s - (tau >= 0.0 ? 1.0 : 0.0));
            } else if (ringing && tau >= half) {
                level += 0.5 * d * spec.overshoot_frac * ring(tau - half);
            }
        }
        w.samples[n] = spec.dc_offset + level * half_swing;
    }
    return w;
}

Waveform add_dc_bias(const Waveform& w, double v_dc) {
    Waveform out = w;
    for (auto& s : out.samples) s += v_dc;
    return out;
}

Waveform scale(const Waveform& w, double gain) {
    Waveform out = w;
    for (auto& s : out.samples) s *= gain;
    return out;
}

Waveform resample(const Waveform& w, double new_rate) {
    w.validate();
    if (!(new_rate > 0)) throw std::invalid_argument("resample: new rate must be positive");
    if (new_rate == w.sample_rate) return w;

    const double ratio = w.sample_rate / new_rate;  // input samples per output sample
    const double cutoff = std::min(1.0, new_rate / w.sample_rate);
    // Downsampling: widen the kernel so the transition band stays narrow in
    // output-rate terms.
    const int half_width = cutoff < 1.0 ? static_cast<int>(std::ceil(64.0 / cutoff)) : 32;
    const dsp::SincInterpolator interp(half_width, 8.0, cutoff);
    const auto n_out = static_cast<std::size_t>(std::floor(static_cast<double>(w.size() - 1) / ratio)) + 1;

    Waveform out;
    out.sample_rate = new_rate;
    out.t0 = w.t0;
    out.unit = w.unit;
    out.samples.resize(n_out);
    for (std::size_t n = 0; n < n_out; ++n) out.samples[n] = interp.at(w.samples, static_cast<double>(n) * ratio);
    if (out.unit == Unit::watts) {
        // Interpolation ringing must not produce negative optical power.
        for (auto& s : out.samples) s = std::max(s, 0.0);
    }
    return out;
}

Waveform delay(const Waveform& w, double delay_s) {
    w.validate();
    const double shift = delay_s * w.sample_rate;
    const double whole = std::floor(shift);
    const double frac = shift - whole;
    const auto n = static_cast<std::ptrdiff_t>(w.size());
    const auto k0 = static_cast<std::ptrdiff_t>(whole);

    Waveform out = w;
    auto src = [&](std::ptrdiff_t i) { return w.samples[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))]; };

    if (frac < 1e-9 || frac > 1.0 - 1e-9) {
        const std::ptrdiff_t k = frac < 0.5 ? k0 : k0 + 1;
        for (std::ptrdiff_t i = 0; i < n; ++i) out.samples[static_cast<std::size_t>(i)] = src(i - k);
        return out;
    }

    // out[i] = w at index (i - shift) = (i - k0 - 1) + (1 - frac).
    const dsp::SincInterpolator interp;
    std::vector<double> taps;
    interp.weights(1.0 - frac, taps);
    const int hw = interp.half_width();
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t base = i - k0 - 1;
        double acc = 0.0;
        for (int j = 0; j < 2 * hw; ++j) acc += taps[static_cast<std::size_t>(j)] * src(base + j - hw + 1);
        out.samples[static_cast<std::size_t>(i)] = acc;
    }
    if (out.unit == Unit::watts) {
        for (auto& s : out.samples) s = std::max(s, 0.0);
    }
    return out;
}

Waveform slice(const Waveform& w, double t_begin, double t_end) {
    const double fs = w.sample_rate;
    const auto n = static_cast<std::ptrdiff_t>(w.size());
    const auto i0 = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil((t_begin - w.t0) * fs - 1e-9)), 0, n);
    const auto i1 = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil((t_end - w.t0) * fs - 1e-9)), i0, n);
    Waveform out;
    out.sample_rate = fs;
    out.unit = w.unit;
    out.t0 = w.time_at(static_cast<std::size_t>(i0));
    out.samples.assign(w.samples.begin() + i0, w.samples.begin() + i1);
    return out;
}

double mean(const Waveform& w) {
    if (w.samples.empty()) throw std::invalid_argument("mean of empty waveform");
    return std::accumulate(w.samples.begin(), w.samples.end(), 0.0) / static_cast<double>(w.size());
}

void write_waveform(const std::filesystem::path& path, const Waveform& w) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os.write(kWavMagic, 8);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(w.unit));
    detail::put_le<double>(os, w.sample_rate);
    detail::put_le<double>(os, w.t0);
    detail::put_le<std::uint64_t>(os, w.size());
    os.write(reinterpret_cast<const char*>(w.samples.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

Waveform read_waveform(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::invalid_argument("cannot open " + path.string());
    detail::expect_magic(is, kWavMagic);
    const auto tag = detail::get_le<std::uint32_t>(is, "unit tag");
    if (tag > 2) throw std::invalid_argument("unknown unit tag " + std::to_string(tag));
    Waveform w;
    w.unit = static_cast<Unit>(tag);
    w.sample_rate = detail::get_le<double>(is, "sample rate");
    w.t0 = detail::get_le<double>(is, "t0");
    const auto count = detail::get_le<std::uint64_t>(is, "sample count");
    w.samples.resize(count);
    if (!is.read(reinterpret_cast<char*>(w.samples.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
        throw std::invalid_argument("truncated sample payload in " + path.string());
    }
    w.validate();
    return w;
}

void write_waveform_csv(const std::filesystem::path& path, const Waveform& w) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << "t_seconds,value\n" << std::setprecision(17);
    for (std::size_t n = 0; n < w.size(); ++n) os << w.time_at(n) << ',' << w.samples[n] << '\n';
}

Waveform read_waveform_csv(const std::filesystem::path& path, Unit unit) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("t_seconds,value", 0) != 0) {
        throw std::invalid_argument("CSV waveform must start with header t_seconds,value");
    }
    std::vector<double> t;
    Waveform w;
    w.unit = unit;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("malformed CSV row: " + line);
        t.push_back(std::stod(line.substr(0, comma)));
        w.samples.push_back(std::stod(line.substr(comma + 1)));
    }
    if (t.size() < 2) throw std::invalid_argument("CSV waveform needs at least two rows");
    w.t0 = t.front();
    w.sample_rate = static_cast<double>(t.size() - 1) / (t.back() - t.front());
    w.validate();
    return w;
}

}  // namespace owl
