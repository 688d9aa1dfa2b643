#include "owl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "owl/dsp.hpp"
#include "owl/errors.hpp"

namespace owl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPhaseGrid = 64;
constexpr int kReceiverOrder = 4;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

bool ceq_boosts(const LinkConfig& cfg, double bit_rate) {
    return cfg.ceq.enabled && cfg.ceq.pole_rb_factor * bit_rate > cfg.ceq.zero_hz;
}

// Linear interpolation at an absolute time, clamped to the record.
double value_at(const Waveform& w, double t) {
    const double pos = (t - w.t0) * w.sample_rate;
    if (pos <= 0) return w.samples.front();
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= w.size()) return w.samples.back();
    const double f = pos - static_cast<double>(i);
    return w.samples[i] * (1.0 - f) + w.samples[i + 1] * f;
}

std::vector<double> sample_instants(const Waveform& w, double first, double ui) {
    std::vector<double> v;
    const double t_end = w.time_at(w.size() - 1);
    v.reserve(static_cast<std::size_t>((t_end - first) / ui) + 1);
    for (double t = first; t <= t_end; t = first + static_cast<double>(v.size()) * ui) v.push_back(value_at(w, t));
    return v;
}

struct Split {
    double mu_high = 0, mu_low = 0, sd_high = 0, sd_low = 0;
    std::size_t n_high = 0, n_low = 0;
};

Split split_at(const std::vector<double>& v, double thr) {
    Split s;
    double ss_h = 0, ss_l = 0;
    for (double x : v) {
        if (x > thr) {
            ++s.n_high;
            s.mu_high += x;
            ss_h += x * x;
        } else {
            ++s.n_low;
            s.mu_low += x;
            ss_l += x * x;
        }
    }
    if (s.n_high) {
        s.mu_high /= static_cast<double>(s.n_high);
        s.sd_high = std::sqrt(std::max(0.0, ss_h / static_cast<double>(s.n_high) - s.mu_high * s.mu_high));
    }
    if (s.n_low) {
        s.mu_low /= static_cast<double>(s.n_low);
        s.sd_low = std::sqrt(std::max(0.0, ss_l / static_cast<double>(s.n_low) - s.mu_low * s.mu_low));
    }
    return s;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Midpoint of the two histogram modes; nullopt when the histogram has no
// valley deeper than half the smaller mode.
std::optional<double> bimodal_threshold(const std::vector<double>& v) {
    constexpr int kBins = 128;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return std::nullopt;
    const double width = (hi - lo) / kBins;
    std::vector<std::size_t> hist(kBins, 0);
    for (double x : v) hist[static_cast<std::size_t>(std::min(kBins - 1, static_cast<int>((x - lo) / width)))]++;

    const int split = std::clamp(static_cast<int>((mean_of(v) - lo) / width), 1, kBins - 1);
    const auto peak_lo = static_cast<int>(std::max_element(hist.begin(), hist.begin() + split) - hist.begin());
    const auto peak_hi = static_cast<int>(std::max_element(hist.begin() + split, hist.end()) - hist.begin());
    const std::size_t smaller = std::min(hist[static_cast<std::size_t>(peak_lo)], hist[static_cast<std::size_t>(peak_hi)]);
    const std::size_t valley = *std::min_element(hist.begin() + peak_lo, hist.begin() + peak_hi + 1);
    if (smaller == 0 || 2 * valley >= smaller) return std::nullopt;
    return lo + width * (0.5 * (peak_lo + peak_hi) + 0.5);
}

}  // namespace

LinkConfig LinkConfig::default_3g() { return LinkConfig{}; }

void LinkConfig::validate() const {
    require(pad_loss_db >= 0 && splitter_loss_db >= 0 && bt_il_db >= 0 && fs_loss_db >= 0 && bpi_il_db >= 0,
            "link losses must be >= 0");
    require(drive_impedance > 0, "drive_impedance must be positive");
    require(vcsel.i_th > 0 && vcsel.i_th < vcsel.i_roll, "VCSEL requires 0 < i_th < i_roll");
    require(vcsel.p_max > 0 && vcsel.slope_w_per_a > 0, "VCSEL p_max and slope must be positive");
    require(vcsel.f3db > 0, "VCSEL f3db must be positive");
    require(i_dc > vcsel.i_th && i_dc < vcsel.i_roll, "i_dc must lie inside the VCSEL linear range");
    require(rx.responsivity_a_per_w > 0, "responsivity must be positive");
    require(rx.f_low > 0 && rx.f_low < rx.f_high, "photoreceiver requires 0 < f_low < f_high");
    require(rx.vpp_max > 0, "photoreceiver vpp_max must be positive");
    require(cable_delay_s >= 0, "cable_delay_s must be >= 0");
    require(ceq.latency_s >= 0, "ceq latency must be >= 0");
    require(ceq.zero_hz > 0 && ceq.pole_rb_factor > 0, "ceq boost frequencies must be positive");
    require(noise_sigma_v >= 0, "noise_sigma_v must be >= 0");
}

Waveform vcsel_transfer(const Waveform& drive, const LinkConfig& cfg) {
    require(drive.unit == Unit::volts, "vcsel_transfer expects a volts waveform");
    drive.validate();
    const auto& v = cfg.vcsel;
    Waveform out;
    out.sample_rate = drive.sample_rate;
    out.t0 = drive.t0;
    out.unit = Unit::watts;
    out.samples.resize(drive.size());
    for (std::size_t n = 0; n < drive.size(); ++n) {
        const double i = cfg.i_dc + drive.samples[n] / cfg.drive_impedance;
        out.samples[n] = std::clamp(v.slope_w_per_a * (i - v.i_th), 0.0, v.p_max);
    }
    dsp::Cascade lp({dsp::lowpass_first_order(v.f3db, drive.sample_rate)});
    lp.prime(out.samples.front());
    lp.process(out.samples);
    for (auto& p : out.samples) p = std::max(p, 0.0);
    return out;
}

Waveform photoreceiver_transfer(const Waveform& light, const LinkConfig& cfg) {
    require(light.unit == Unit::watts, "photoreceiver_transfer expects a watts waveform");
    light.validate();
    const auto& rx = cfg.rx;
    const double gain = (rx.inverting ? -1.0 : 1.0) * rx.tia_gain_v_per_a * rx.responsivity_a_per_w;

    Waveform out = scale(light, gain);
    out.unit = Unit::volts;

    dsp::Cascade hp({dsp::highpass_first_order(rx.f_low, out.sample_rate)});
    // Settled start: the coupling capacitor is charged to the record mean.
    if (rx.settled_start) hp.prime(mean(out));
    hp.process(out.samples);

    auto lp = dsp::bessel_lowpass(kReceiverOrder, rx.f_high, out.sample_rate);
    lp.prime(out.samples.front());
    lp.process(out.samples);

    if (cfg.noise_sigma_v > 0) {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma_v);
        for (auto& x : out.samples) x += noise(rng);
    }

    const double rail = rx.vpp_max / 2.0;
    for (auto& x : out.samples) x = rail * std::tanh(x / rail);
    return out;
}

CeqOutput cable_equalizer(const Waveform& rx, const LinkConfig& cfg, double ui, const PulseSpec& out_pulse) {
    require(rx.unit == Unit::volts, "cable_equalizer expects a volts waveform");
    rx.validate();
    require(ui > 0, "ui must be positive");
    require(rx.duration() >= 64.0 * ui, "cable_equalizer needs at least 64 UI of signal");

    CeqOutput out;
    out.equalized = rx;
    const double bit_rate = 1.0 / ui;
    if (ceq_boosts(cfg, bit_rate)) {
        dsp::Cascade eq({dsp::zero_pole(cfg.ceq.zero_hz, cfg.ceq.pole_rb_factor * bit_rate, rx.sample_rate)});
        eq.prime(out.equalized.samples.front());
        eq.process(out.equalized.samples);
    }

    // Clock phase: largest separation of the sliced level means.
    double best_phase = 0.0;
    double best_open = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kPhaseGrid; ++i) {
        const double phase = rx.t0 + ui * i / kPhaseGrid;
        const auto v = sample_instants(out.equalized, phase, ui);
        const auto s = split_at(v, mean_of(v));
        const double open = (s.n_high && s.n_low) ? s.mu_high - s.mu_low : 0.0;
        if (open > best_open) {
            best_open = open;
            best_phase = phase;
        }
    }
    out.sample_phase_s = best_phase;

    const auto v = sample_instants(out.equalized, best_phase, ui);
    if (cfg.ceq.slicer_threshold_v) {
        out.threshold_v = *cfg.ceq.slicer_threshold_v;
    } else {
        const auto thr = bimodal_threshold(v);
        if (!thr) {
            const auto s = split_at(v, mean_of(v));
            const double sd = s.sd_high + s.sd_low;
            const double q = sd > 0 ? (s.mu_high - s.mu_low) / sd : 0.0;
            throw DegradedSignal("cable equalizer: eye closed, no bimodal amplitude histogram", q);
        }
        out.threshold_v = *thr;
    }

    out.levels.resize(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out.levels[k] = v[k] > out.threshold_v ? 1 : -1;

    out.latency_s = cfg.ceq.enabled ? cfg.ceq.latency_s : 0.0;
    PulseSpec p = out_pulse;
    p.ui = ui;
    p.t_rise = std::min(p.t_rise, 0.3 * ui);
    p.t_fall = std::min(p.t_fall, 0.3 * ui);
    out.reclocked = synthesize(out.levels, p, rx.sample_rate, best_phase - ui / 2.0 + out.latency_s - rx.t0);
    out.reclocked.t0 = rx.t0;
    return out;
}

const Waveform* ChainTrace::find_stage(const std::string& name) const {
    for (const auto& s : stages) {
        if (s.name == name) return &s.waveform;
    }
    return nullptr;
}

const Waveform& ChainTrace::stage(const std::string& name) const {
    if (const auto* w = find_stage(name)) return *w;
    throw NotFound("no chain stage named " + name);
}

ChainTrace run_chain(const BitStream& bits, const LinkConfig& cfg, const PulseSpec& pulse, const ChainOptions& opts) {
    require(!bits.empty(), "run_chain: empty bit stream");
    require(bits.bit_rate > 0, "run_chain: bit rate must be positive");
    require(std::abs(pulse.ui * bits.bit_rate - 1.0) < 1e-9, "run_chain: pulse.ui must equal 1 / bit_rate");
    cfg.validate();
    pulse.validate();

    const double ui = pulse.ui;
    const double fs = opts.sample_rate;

    double group_delay = 1.0 / (2.0 * kPi * cfg.vcsel.f3db) + dsp::bessel_group_delay(kReceiverOrder, cfg.rx.f_high) +
                         cfg.cable_delay_s;
    if (ceq_boosts(cfg, bits.bit_rate)) {
        group_delay += 1.0 / (2.0 * kPi * cfg.ceq.pole_rb_factor * bits.bit_rate) - 1.0 / (2.0 * kPi * cfg.ceq.zero_hz);
    }
    const auto slack = static_cast<std::size_t>(std::ceil(group_delay / ui)) + 16;

    ChainTrace trace;
    trace.group_delay_s = group_delay;

    // Line levels: one idle UI at the NRZI start level, the payload, then a
    // held tail so the delayed payload is fully captured.
    const auto coded = nrzi_encode(scramble(bits), opts.initial_level);
    trace.tx_levels.reserve(coded.size() + 1 + slack);
    trace.tx_levels.push_back(static_cast<std::int8_t>(opts.initial_level));
    trace.tx_levels.insert(trace.tx_levels.end(), coded.begin(), coded.end());
    trace.tx_levels.insert(trace.tx_levels.end(), slack, coded.back());

    auto keep = [&](const char* name, const Waveform& w) {
        if (opts.keep_intermediate) trace.stages.push_back({name, w});
    };

    Waveform w = synthesize(trace.tx_levels, pulse, fs);
    trace.stages.push_back({"source", w});

    w = scale(w, db_to_amplitude(-cfg.pad_loss_db));
    keep("pad", w);
    if (cfg.splitter_enabled) {
        w = scale(w, db_to_amplitude(-cfg.splitter_loss_db));
        keep("splitter", w);
    }
    w = scale(w, db_to_amplitude(-cfg.bt_il_db));
    keep("bias_tee", add_dc_bias(w, cfg.v_dc));

    // The bias point (V_DC, I_DC) is the operating point; the laser sees the
    // signal swing across its drive impedance.
    w = vcsel_transfer(w, cfg);
    keep("vcsel", w);
    w = scale(w, db_to_power(-cfg.fs_loss_db));
    keep("free_space", w);
    w = photoreceiver_transfer(w, cfg);
    keep("photoreceiver", w);
    if (cfg.bpi_enabled) {
        w = scale(w, -db_to_amplitude(-cfg.bpi_il_db));
        keep("bpi", w);
    }
    w = delay(w, cfg.cable_delay_s);
    trace.stages.push_back({"rx_pre_ceq", w});

    auto ceq = cable_equalizer(w, cfg, ui, pulse);
    trace.sample_phase_s = ceq.sample_phase_s;
    trace.ceq_latency_s = ceq.latency_s;
    trace.rx_levels = std::move(ceq.levels);

    // Align recovered levels to the transmitted line by sign correlation.
    const auto& tx = trace.tx_levels;
    const auto& rxl = trace.rx_levels;
    const std::size_t probe = std::min<std::size_t>(4096, tx.size());
    const std::size_t max_off = std::min(slack + 16, rxl.size() > 0 ? rxl.size() - 1 : 0);
    long best = 0;
    std::size_t best_off = 0;
    for (std::size_t o = 0; o <= max_off; ++o) {
        long c = 0;
        for (std::size_t k = 0; k < probe && o + k < rxl.size(); ++k) c += tx[k] * rxl[o + k];
        if (std::labs(c) > std::labs(best)) {
            best = c;
            best_off = o;
        }
    }
    trace.level_offset = best_off;
    trace.polarity_inverted = best < 0;

    const std::size_t n = bits.size();
    const std::size_t available = rxl.size() > best_off + 1 ? std::min(n, rxl.size() - best_off - 1) : 0;
    trace.missing_bits = n - available;
    if (available > 0) {
        const std::span<const std::int8_t> payload(rxl.data() + best_off + 1, available);
        trace.recovered = descramble(nrzi_decode(payload, rxl[best_off], bits.bit_rate));
    } else {
        trace.recovered.bit_rate = bits.bit_rate;
    }
    std::size_t errors = trace.missing_bits;
    for (std::size_t k = 0; k < available; ++k) errors += trace.recovered.bits[k] != bits.bits[k];
    trace.bit_errors = errors;

    const double first = ceq.sample_phase_s + static_cast<double>(best_off + 1) * ui - ui / 2.0;
    const double last = ceq.sample_phase_s + static_cast<double>(best_off + available) * ui + ui / 2.0;
    trace.eye_waveform = slice(ceq.equalized, first, last);

    if (opts.keep_intermediate) {
        trace.stages.push_back({"equalized", std::move(ceq.equalized)});
        trace.stages.push_back({"reclocked", std::move(ceq.reclocked)});
    }
    return trace;
}

}  // namespace owl
