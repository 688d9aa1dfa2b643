#include "owl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "owl/budget.hpp"
#include "owl/errors.hpp"

namespace owl {

namespace {

constexpr int kPhaseGrid = 64;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t nearest_index(const Waveform& w, double t) {
    const double pos = std::round((t - w.t0) * w.sample_rate);
    return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(w.size() - 1)));
}

struct Moments {
    double mu_hi = 0, mu_lo = 0, sd_hi = 0, sd_lo = 0;
    bool both = false;
};

Moments split_moments(const std::vector<double>& v) {
    const double thr = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s_hi = 0, ss_hi = 0, s_lo = 0, ss_lo = 0;
    std::size_t n_hi = 0, n_lo = 0;
    for (double x : v) {
        if (x > thr) {
            s_hi += x;
            ss_hi += x * x;
            ++n_hi;
        } else {
            s_lo += x;
            ss_lo += x * x;
            ++n_lo;
        }
    }
    Moments m;
    m.both = n_hi > 0 && n_lo > 0;
    if (!m.both) return m;
    m.mu_hi = s_hi / static_cast<double>(n_hi);
    m.mu_lo = s_lo / static_cast<double>(n_lo);
    m.sd_hi = std::sqrt(std::max(0.0, ss_hi / static_cast<double>(n_hi) - m.mu_hi * m.mu_hi));
    m.sd_lo = std::sqrt(std::max(0.0, ss_lo / static_cast<double>(n_lo) - m.mu_lo * m.mu_lo));
    return m;
}

void check_eye_input(const Waveform& w, double ui) {
    w.validate();
    if (!(ui > 0)) throw std::invalid_argument("ui must be positive");
    if (w.sample_rate * ui < 4.0) throw std::invalid_argument("eye needs at least 4 samples per UI");
    if (w.duration() < 32.0 * ui) throw std::invalid_argument("eye needs at least 32 UI of waveform");
}

// Value at fractional position f in [0, 1] between x[i] and x[i+1], using a
// cubic through the four surrounding samples when available.
double local_cubic(const std::vector<double>& x, std::size_t i, double f) {
    if (i == 0 || i + 2 >= x.size()) return x[i] + f * (x[i + 1] - x[i]);
    const double ym = x[i - 1], y0 = x[i], y1 = x[i + 1], y2 = x[i + 2];
    // Lagrange basis on nodes -1, 0, 1, 2.
    const double lm = -f * (f - 1) * (f - 2) / 6.0;
    const double l0 = (f + 1) * (f - 1) * (f - 2) / 2.0;
    const double l1 = -(f + 1) * f * (f - 2) / 2.0;
    const double l2 = (f + 1) * f * (f - 1) / 6.0;
    return ym * lm + y0 * l0 + y1 * l1 + y2 * l2;
}

// Fractional sample index where the signal crosses `level` between i and i+1.
double crossing(const std::vector<double>& x, std::size_t i, double level) {
    const bool rising = x[i + 1] > x[i];
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const bool below = local_cubic(x, i, mid) < level;
        if (below == rising) lo = mid;
        else hi = mid;
    }
    return static_cast<double>(i) + 0.5 * (lo + hi);
}

// Steady levels: histogram modes of the lower and upper halves, refined by
// the median of the samples near each mode (edge samples bias a mean).
std::pair<double, double> steady_levels(const std::vector<double>& x) {
    constexpr int kBins = 1000;
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) throw std::invalid_argument("edge_times: waveform is constant");
    const double width = (hi - lo) / kBins;
    std::vector<std::size_t> hist(kBins, 0);
    auto bin_of = [&](double v) { return std::min(kBins - 1, static_cast<int>((v - lo) / width)); };
    for (double v : x) hist[static_cast<std::size_t>(bin_of(v))]++;
    const auto half = hist.begin() + kBins / 2;
    const int m_lo = static_cast<int>(std::max_element(hist.begin(), half) - hist.begin());
    const int m_hi = static_cast<int>(std::max_element(half, hist.end()) - hist.begin());
    std::vector<double> near_lo, near_hi;
    for (double v : x) {
        const int b = bin_of(v);
        if (std::abs(b - m_lo) <= 2) near_lo.push_back(v);
        else if (std::abs(b - m_hi) <= 2) near_hi.push_back(v);
    }
    auto median = [](std::vector<double>& v) {
        auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
    };
    return {median(near_lo), median(near_hi)};
}

double quantize(double v, double step) { return std::round(v / step) * step; }

MaskRule make_rule(std::string name, double measured, double lower, double upper, std::string unit) {
    return {std::move(name), measured, lower, upper, std::move(unit), measured >= lower && measured <= upper};
}

}  // namespace

std::uint64_t EyeDiagram::total() const { return std::accumulate(hist.begin(), hist.end(), std::uint64_t{0}); }

void EyeDiagram::merge(const EyeDiagram& other) {
    if (other.phase_bins != phase_bins || other.amp_bins != amp_bins || other.amp_min != amp_min ||
        other.amp_max != amp_max || other.ui != ui) {
        throw std::invalid_argument("cannot merge eyes with different geometry");
    }
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += other.hist[i];
    n_traces += other.n_traces;
}

double vertical_opening_at(const Waveform& w, double ui, double phase_s) {
    std::vector<double> v;
    const double t_end = w.time_at(w.size() - 1);
    double t = phase_s;
    if (t < w.t0) t += std::ceil((w.t0 - t) / ui) * ui;
    for (std::size_t k = 0; t + static_cast<double>(k) * ui <= t_end; ++k) {
        v.push_back(w.samples[nearest_index(w, t + static_cast<double>(k) * ui)]);
    }
    if (v.empty()) return 0.0;
    const auto m = split_moments(v);
    if (!m.both) return 0.0;
    return (m.mu_hi - 3.0 * m.sd_hi) - (m.mu_lo + 3.0 * m.sd_lo);
}

EyeDiagram build_eye(const Waveform& w, double ui, const EyeOptions& opts) {
    check_eye_input(w, ui);
    if (opts.phase_bins < 2 || opts.amp_bins < 2) throw std::invalid_argument("eye needs at least 2x2 bins");

    double phase = 0.0;
    if (opts.clock_phase_s) {
        phase = *opts.clock_phase_s;
    } else {
        double best = -kInf;
        for (int i = 0; i < kPhaseGrid; ++i) {
            const double p = w.t0 + ui * i / kPhaseGrid;
            const double open = vertical_opening_at(w, ui, p);
            if (open > best) {
                best = open;
                phase = p;
            }
        }
    }

    EyeDiagram eye;
    eye.ui = ui;
    eye.phase_bins = opts.phase_bins;
    eye.amp_bins = opts.amp_bins;
    eye.clock_phase_s = phase;

    const auto [lo_it, hi_it] = std::minmax_element(w.samples.begin(), w.samples.end());
    double span = *hi_it - *lo_it;
    if (span <= 0) span = std::max(1e-3, std::abs(*hi_it) * 0.05) * 20.0;
    eye.amp_min = *lo_it - 0.05 * span;
    eye.amp_max = *hi_it + 0.05 * span;
    eye.hist.assign(static_cast<std::size_t>(eye.phase_bins) * static_cast<std::size_t>(eye.amp_bins), 0);

    const double t_first = w.t0;
    const double t_last = w.time_at(w.size() - 1);
    const double aw = eye.amp_bin_width();
    // First trace whose window starts inside the record.
    double k0 = std::ceil((t_first + ui - phase) / ui - 1e-9);
    for (double k = k0;; k += 1.0) {
        const double centre = phase + k * ui;
        if (centre + ui > t_last + 0.5 / w.sample_rate) break;
        for (int p = 0; p < eye.phase_bins; ++p) {
            const double t = centre - ui + eye.phase_center(p);
            const double v = w.samples[nearest_index(w, t)];
            const int a = std::clamp(static_cast<int>((v - eye.amp_min) / aw), 0, eye.amp_bins - 1);
            eye.hist[static_cast<std::size_t>(p) * static_cast<std::size_t>(eye.amp_bins) + static_cast<std::size_t>(a)]++;
        }
        ++eye.n_traces;
    }
    if (eye.n_traces == 0) throw std::invalid_argument("eye: no complete trace in waveform");
    return eye;
}

EyeMetrics q_factor(const EyeDiagram& eye, double window_frac) {
    if (!(window_frac > 0 && window_frac <= 1)) throw std::invalid_argument("window_frac must be in (0, 1]");
    const int nb = eye.amp_bins;
    const double half_win = 0.5 * window_frac * eye.ui;
    std::vector<double> agg(static_cast<std::size_t>(nb), 0.0);
    int used = 0;
    for (int p = 0; p < eye.phase_bins; ++p) {
        if (std::abs(eye.phase_center(p) - eye.ui) > half_win) continue;
        for (int a = 0; a < nb; ++a) agg[static_cast<std::size_t>(a)] += static_cast<double>(eye.count(p, a));
        ++used;
    }
    if (used == 0) {
        const int p = eye.phase_bins / 2;
        for (int a = 0; a < nb; ++a) agg[static_cast<std::size_t>(a)] += static_cast<double>(eye.count(p, a));
    }

    const double total = std::accumulate(agg.begin(), agg.end(), 0.0);
    double mean_amp = 0.0;
    for (int a = 0; a < nb; ++a) mean_amp += agg[static_cast<std::size_t>(a)] * eye.amp_center(a);
    mean_amp /= total;

    auto moments = [&](int from, int to) {  // inclusive
        double n = 0, s = 0, ss = 0;
        for (int a = from; a <= to; ++a) {
            const double c = agg[static_cast<std::size_t>(a)];
            const double x = eye.amp_center(a);
            n += c;
            s += c * x;
            ss += c * x * x;
        }
        const double mu = n > 0 ? s / n : 0.0;
        const double w = eye.amp_bin_width();
        // Sheppard's correction for bin quantization.
        const double var = n > 0 ? std::max(0.0, ss / n - mu * mu - w * w / 12.0) : 0.0;
        return std::tuple{n, mu, std::sqrt(var)};
    };

    const int split = std::clamp(static_cast<int>((mean_amp - eye.amp_min) / eye.amp_bin_width()), 1, nb - 1);
    const auto peak_lo = static_cast<int>(std::max_element(agg.begin(), agg.begin() + split) - agg.begin());
    const auto peak_hi = static_cast<int>(std::max_element(agg.begin() + split, agg.end()) - agg.begin());
    const double smaller = std::min(agg[static_cast<std::size_t>(peak_lo)], agg[static_cast<std::size_t>(peak_hi)]);
    const auto valley_it = std::min_element(agg.begin() + peak_lo, agg.begin() + peak_hi + 1);
    // Centre of the minimum plateau, so an empty gap splits in the middle.
    int first_min = static_cast<int>(valley_it - agg.begin());
    int last_min = first_min;
    for (int a = first_min; a <= peak_hi; ++a) {
        if (agg[static_cast<std::size_t>(a)] == *valley_it) last_min = a;
    }
    const int valley = (first_min + last_min) / 2;

    if (smaller <= 0 || 2.0 * *valley_it >= smaller) {
        const auto [n_l, mu_l, sd_l] = moments(0, split - 1);
        const auto [n_h, mu_h, sd_h] = moments(split, nb - 1);
        const double q = (n_l > 0 && n_h > 0 && sd_l + sd_h > 0) ? (mu_h - mu_l) / (sd_l + sd_h) : 0.0;
        throw DegradedSignal("eye closed: amplitude distribution at the eye centre is not bimodal", q);
    }

    const auto [n_l, mu_l, sd_l] = moments(0, valley);
    const auto [n_h, mu_h, sd_h] = moments(valley + 1, nb - 1);

    EyeMetrics m;
    m.v_high_mean = mu_h;
    m.v_low_mean = mu_l;
    m.sigma_high = sd_h;
    m.sigma_low = sd_l;
    const double v_s = 0.5 * (mu_h - mu_l);
    const double sigma_n = 0.5 * (sd_h + sd_l);
    m.q_factor = sigma_n > 0 ? v_s / sigma_n : kInf;
    m.snr_db = std::isinf(m.q_factor) ? kInf : q_to_snr_db(m.q_factor);
    m.ber_est = std::isinf(m.q_factor) ? 0.0 : q_to_ber(m.q_factor);
    m.vertical_opening_v = std::max(0.0, (mu_h - 3.0 * sd_h) - (mu_l + 3.0 * sd_l));

    // Horizontal opening: run of columns around the centre with no samples in
    // the threshold (valley) bin.
    const int pc = eye.phase_bins / 2;
    auto clear = [&](int p) { return eye.count(p, valley) == 0; };
    int run = 0;
    if (clear(pc)) {
        int left = pc, right = pc;
        while (left - 1 >= 0 && clear(left - 1)) --left;
        while (right + 1 < eye.phase_bins && clear(right + 1)) ++right;
        run = right - left + 1;
    }
    m.horizontal_opening_ui = 2.0 * run / eye.phase_bins;
    return m;
}

EdgeTimes edge_times(const Waveform& w, double ui) {
    w.validate();
    if (!(ui > 0)) throw std::invalid_argument("ui must be positive");
    const auto& x = w.samples;
    const auto [v_lo, v_hi] = steady_levels(x);
    const double swing = v_hi - v_lo;
    const double l20 = v_lo + 0.2 * swing;
    const double l50 = v_lo + 0.5 * swing;
    const double l80 = v_lo + 0.8 * swing;
    const double settle = 1.5 * ui * w.sample_rate;  // samples

    std::vector<std::size_t> mids;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if ((x[i] < l50) != (x[i + 1] < l50)) mids.push_back(i);
    }

    double sum_r = 0, sum_f = 0;
    std::size_t n_r = 0, n_f = 0;
    for (std::size_t j = 0; j < mids.size(); ++j) {
        const std::size_t i = mids[j];
        const double prev = j == 0 ? 0.0 : static_cast<double>(mids[j - 1]);
        if (static_cast<double>(i) - prev < settle) continue;
        const std::size_t next = j + 1 < mids.size() ? mids[j + 1] : x.size() - 1;
        const bool rising = x[i + 1] > x[i];
        const double first_level = rising ? l20 : l80;
        const double last_level = rising ? l80 : l20;
        auto before = [&](double v, double level) { return rising ? v < level : v > level; };

        // Walk back to the start-level crossing and forward to the end-level crossing.
        std::size_t a = i;
        while (a > static_cast<std::size_t>(prev) && !before(x[a], first_level)) --a;
        if (!before(x[a], first_level) || before(x[a + 1], first_level)) continue;
        std::size_t b = i + 1;
        while (b < next && before(x[b], last_level)) ++b;
        if (before(x[b], last_level)) continue;

        const double dt = (crossing(x, b - 1, last_level) - crossing(x, a, first_level)) / w.sample_rate;
        if (rising) {
            sum_r += dt;
            ++n_r;
        } else {
            sum_f += dt;
            ++n_f;
        }
    }
    if (n_r < 8 || n_f < 8) {
        throw std::invalid_argument("edge_times: need at least 8 settled rising and 8 settled falling edges");
    }

    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    EdgeTimes e;
    e.t_rise_s = sum_r / static_cast<double>(n_r);
    e.t_fall_s = sum_f / static_cast<double>(n_f);
    e.n_rising = n_r;
    e.n_falling = n_f;
    e.v_high = v_hi;
    e.v_low = v_lo;
    e.overshoot_frac = std::max(0.0, (*mx - v_hi) / (swing / 2.0));
    e.undershoot_frac = std::max(0.0, (v_lo - *mn) / (swing / 2.0));
    return e;
}

bool ComplianceReport::all_pass() const {
    return std::all_of(rules.begin(), rules.end(), [](const MaskRule& r) { return r.pass; });
}

const MaskRule& ComplianceReport::rule(const std::string& name) const {
    for (const auto& r : rules) {
        if (r.name == name) return r;
    }
    throw NotFound("no mask rule " + name);
}

ComplianceReport mask_check(const EdgeTimes& e, const MaskLimits& lim) {
    const double tr = quantize(e.t_rise_s, 0.1e-12);
    const double tf = quantize(e.t_fall_s, 0.1e-12);
    ComplianceReport r;
    r.rules.push_back(make_rule("amplitude_vpp", quantize(e.vpp(), 0.1e-3), lim.vpp_min, lim.vpp_max, "V"));
    r.rules.push_back(make_rule("rise_time", tr, -kInf, lim.t_edge_max, "s"));
    r.rules.push_back(make_rule("fall_time", tf, -kInf, lim.t_edge_max, "s"));
    r.rules.push_back(make_rule("rise_fall_mismatch", quantize(std::abs(tr - tf), 0.1e-12), -kInf,
                                lim.t_edge_mismatch_max + 1e-18, "s"));
    r.rules.push_back(make_rule("overshoot", quantize(std::max(e.overshoot_frac, e.undershoot_frac), 1e-4), -kInf,
                                lim.overshoot_max, "fraction"));
    r.rules.push_back(make_rule("dc_offset", quantize(e.dc_offset(), 0.1e-3), -lim.dc_offset_max, lim.dc_offset_max, "V"));
    return r;
}

BitErrorCount count_bit_errors(const BitStream& tx, const BitStream& rx, std::size_t max_offset) {
    if (tx.empty() || rx.empty()) throw std::invalid_argument("count_bit_errors: empty stream");
    const auto n_tx = static_cast<long>(tx.size());
    const auto n_rx = static_cast<long>(rx.size());
    auto overlap_of = [&](long off) {
        const long begin = std::max(0L, -off);
        const long end = std::min(n_tx, n_rx - off);
        return std::max(0L, end - begin);
    };

    const long lim = static_cast<long>(max_offset);
    long best_off = 0;
    long best_match = -1;
    for (long off = -lim; off <= lim; ++off) {
        const long ov = overlap_of(off);
        if (ov < 1000) continue;
        const long begin = std::max(0L, -off);
        const long probe = std::min(ov, 4096L);
        long match = 0;
        for (long k = begin; k < begin + probe; ++k) match += tx.bits[static_cast<std::size_t>(k)] == rx.bits[static_cast<std::size_t>(k + off)];
        // Prefer the smallest |offset| on ties.
        if (match > best_match || (match == best_match && std::labs(off) < std::labs(best_off))) {
            best_match = match;
            best_off = off;
        }
    }
    if (best_match < 0) throw std::invalid_argument("count_bit_errors: overlap shorter than 1000 bits");

    BitErrorCount c;
    c.offset = best_off;
    c.overlap = static_cast<std::size_t>(overlap_of(best_off));
    const long begin = std::max(0L, -best_off);
    for (long k = begin; k < begin + static_cast<long>(c.overlap); ++k) {
        c.errors += tx.bits[static_cast<std::size_t>(k)] != rx.bits[static_cast<std::size_t>(k + best_off)];
    }
    c.ber = static_cast<double>(c.errors) / static_cast<double>(c.overlap);
    return c;
}

void write_eye_csv(const std::filesystem::path& path, const EyeDiagram& eye) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << std::setprecision(9) << "phase_s";
    for (int a = 0; a < eye.amp_bins; ++a) os << ',' << eye.amp_center(a);
    os << '\n';
    for (int p = 0; p < eye.phase_bins; ++p) {
        os << eye.phase_center(p);
        for (int a = 0; a < eye.amp_bins; ++a) os << ',' << eye.count(p, a);
        os << '\n';
    }
}

void write_eye_svg(const std::filesystem::path& path, const EyeDiagram& eye, const MaskLimits& limits, double dc_offset) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    constexpr double W = 800, H = 500;
    const double cw = W / eye.phase_bins, ch = H / eye.amp_bins;
    const double peak = static_cast<double>(*std::max_element(eye.hist.begin(), eye.hist.end()));
    auto y_of = [&](double v) { return H * (eye.amp_max - v) / (eye.amp_max - eye.amp_min); };

    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"black\"/>\n";
    for (int p = 0; p < eye.phase_bins; ++p) {
        for (int a = 0; a < eye.amp_bins; ++a) {
            const auto c = eye.count(p, a);
            if (c == 0) continue;
            const double level = std::log1p(static_cast<double>(c)) / std::log1p(peak);
            const int g = static_cast<int>(64 + 191 * level);
            os << "<rect x=\"" << p * cw << "\" y=\"" << (eye.amp_bins - 1 - a) * ch << "\" width=\"" << cw
               << "\" height=\"" << ch << "\" fill=\"rgb(" << g / 3 << ',' << g << ',' << g / 2 << ")\"/>\n";
        }
    }
    // Amplitude limits around the nominal offset.
    for (double v : {limits.vpp_min / 2, limits.vpp_max / 2, limits.vpp_max / 2 * (1 + limits.overshoot_max)}) {
        for (double s : {-1.0, 1.0}) {
            const double y = y_of(dc_offset + s * v);
            if (y < 0 || y > H) continue;
            os << "<line x1=\"0\" x2=\"" << W << "\" y1=\"" << y << "\" y2=\"" << y
               << "\" stroke=\"red\" stroke-dasharray=\"6,4\" stroke-width=\"1\"/>\n";
        }
    }
    os << "<line x1=\"" << W / 2 << "\" x2=\"" << W / 2 << "\" y1=\"0\" y2=\"" << H
       << "\" stroke=\"gray\" stroke-width=\"0.5\"/>\n</svg>\n";
}

}  // namespace owl
